//! Exact k-nearest-neighbor graphs under Euclidean distance.

use serde::Serialize;

use crate::dataset::ActivationSet;
use crate::error::{Error, Result};

/// Directed kNN graph. Neighbor lists are sorted by ascending distance
/// with ties broken by ascending index; self-edges are excluded.
#[derive(Debug, Clone, Serialize)]
pub struct KnnGraph {
    pub neighbors: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
    pub k: usize,
    /// Whether the edge set was mutualized (union with reverse edges).
    pub symmetric: bool,
}

/// Exact (non-approximate) k nearest neighbors by brute-force scan.
pub fn knn_graph(x: &ActivationSet, k: usize) -> Result<KnnGraph> {
    let n = x.n();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let values = &x.values;
    let mut neighbors = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        let row_i = values.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let row_j = values.row(j);
            let mut d2 = 0.0;
            for (a, b) in row_i.iter().zip(row_j.iter()) {
                let diff = a - b;
                d2 += diff * diff;
            }
            cand.push((d2, j));
        }
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        neighbors.push(cand[..k].iter().map(|&(_, j)| j).collect());
        distances.push(cand[..k].iter().map(|&(d2, _)| d2.sqrt()).collect());
    }
    Ok(KnnGraph {
        neighbors,
        distances,
        k,
        symmetric: false,
    })
}

impl KnnGraph {
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    /// Number of connected components of the undirected version of the
    /// graph.
    pub fn components(&self) -> usize {
        let n = self.n();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, nbs) in self.neighbors.iter().enumerate() {
            for &j in nbs {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &w in &adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }
}
