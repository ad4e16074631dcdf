//! Nonlinear manifold embeddings of the activation space: locally linear
//! embedding with the trend (k=100) and accentuated (k=25) neighborhood
//! regimes, and a Laplacian-eigenmaps variant for comparison.

mod knn;

pub use knn::{knn_graph, KnnGraph};

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{ActivationSet, PaintingMeta};
use crate::embedding::{Embedding, Provenance};
use crate::error::{Error, Result};
use crate::linalg;

/// Neighborhood size capturing the overall trend.
pub const REGIME_TREND_K: usize = 100;
/// Neighborhood size accentuating distinctive structures.
pub const REGIME_ACCENT_K: usize = 25;

/// Above this row count the embedding operator is kept sparse and solved
/// by shift-invert iteration instead of a dense factorization.
const DENSE_LIMIT: usize = 4000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldParams {
    pub method: String,
    pub k: usize,
    pub m: usize,
    pub regularization: f64,
    pub solver: String,
    pub mutualized: bool,
    pub residual_tol: f64,
}

/// Locally linear embedding output: the row-stochastic reconstruction
/// weights, the embedding, and the bottom of the operator spectrum.
#[derive(Debug, Clone)]
pub struct LleResult {
    /// Sparse reconstruction weights per row, aligned with neighbor sets.
    pub weights: Vec<Vec<(usize, f64)>>,
    pub embedding: Embedding,
    /// The m+1 smallest eigenvalues of (I-W)ᵀ(I-W), ascending; the first
    /// belongs to the excluded constant eigenvector.
    pub bottom_eigenvalues: Vec<f64>,
    pub params: ManifoldParams,
}

/// Laplacian-eigenmaps output (heat-kernel weights on the mutualized
/// graph, normalized Laplacian).
#[derive(Debug, Clone)]
pub struct LaplacianResult {
    pub embedding: Embedding,
    pub bottom_eigenvalues: Vec<f64>,
    pub params: ManifoldParams,
    pub bandwidth: f64,
}

/// Solves the constrained local reconstruction for one row: weights over
/// the neighbor set minimizing ||x_i - sum w_j x_j|| subject to sum w = 1,
/// with a Tikhonov term reg*trace(G)/k on the local Gram matrix.
fn local_weights(
    x: &Array2<f64>,
    i: usize,
    neighbors: &[usize],
    reg: f64,
) -> Result<Vec<f64>> {
    let k = neighbors.len();
    let d = x.ncols();
    let mut diffs = vec![0.0; k * d];
    for (a, &j) in neighbors.iter().enumerate() {
        for c in 0..d {
            diffs[a * d + c] = x[(j, c)] - x[(i, c)];
        }
    }
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let mut acc = 0.0;
            for c in 0..d {
                acc += diffs[a * d + c] * diffs[b * d + c];
            }
            gram[a * k + b] = acc;
            gram[b * k + a] = acc;
        }
    }
    let trace: f64 = (0..k).map(|a| gram[a * k + a]).sum();
    if trace <= 0.0 {
        // All neighbors coincide with the point: any convex weights
        // reconstruct it exactly.
        return Ok(vec![1.0 / k as f64; k]);
    }
    let ridge = reg * trace / k as f64;
    for a in 0..k {
        gram[a * k + a] += ridge;
    }
    let mut w = vec![1.0; k];
    linalg::solve_spd(&mut gram, k, &mut w)?;
    let sum: f64 = w.iter().sum();
    if sum == 0.0 || !sum.is_finite() {
        return Err(Error::SolverFailure(format!(
            "local weight normalization failed at row {i}"
        )));
    }
    for v in w.iter_mut() {
        *v /= sum;
    }
    Ok(w)
}

fn unit_variance_columns(coords: &mut Array2<f64>) {
    let n = coords.nrows();
    if n < 2 {
        return;
    }
    for mut col in coords.columns_mut() {
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        if var > 0.0 {
            let inv = 1.0 / var.sqrt();
            col.mapv_inplace(|v| v * inv);
        }
    }
}

/// Locally linear embedding of the activation manifold.
///
/// The embedding is the bottom non-constant eigenvectors of
/// M = (I-W)ᵀ(I-W), scaled to unit column variance. Columns are flipped so
/// their year correlation is non-negative when metadata with years is
/// supplied.
pub fn lle_embed(
    x: &ActivationSet,
    k: usize,
    m: usize,
    reg: f64,
    meta: Option<&[PaintingMeta]>,
) -> Result<LleResult> {
    let n = x.n();
    if m == 0 {
        return Err(Error::DimensionMismatch("m must be >= 1".into()));
    }
    if k < m + 1 {
        return Err(Error::DimensionMismatch(format!(
            "k={k} must be at least m+1={}",
            m + 1
        )));
    }
    let graph = knn_graph(x, k)?;
    let components = graph.components();
    if components > 1 {
        return Err(Error::DisconnectedGraph { components });
    }

    let mut weights: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let w = local_weights(&x.values, i, &graph.neighbors[i], reg)?;
        weights.push(
            graph.neighbors[i]
                .iter()
                .copied()
                .zip(w.into_iter())
                .collect(),
        );
    }

    let solver;
    let (bottom_eigenvalues, vectors) = if n <= DENSE_LIMIT {
        solver = "dense";
        let mut mmat = Array2::zeros((n, n));
        accumulate_m_dense(&weights, &mut mmat);
        linalg::bottom_eigs_dense(&mmat, m + 1)?
    } else {
        solver = "shift-invert";
        let sparse = build_m_sparse(&weights, n);
        linalg::bottom_eigs_sparse(&sparse, m + 1, 1e-8)?
    };

    let scale = bottom_eigenvalues
        .iter()
        .fold(1.0f64, |acc, &v| acc.max(v.abs()));
    if bottom_eigenvalues[0] < -1e-9 * scale {
        return Err(Error::SolverFailure(format!(
            "embedding operator has negative eigenvalue {}",
            bottom_eigenvalues[0]
        )));
    }

    // Columns 1..=m skip the constant eigenvector.
    let mut coords = Array2::zeros((n, m));
    for j in 0..m {
        for i in 0..n {
            coords[(i, j)] = vectors[(i, j + 1)];
        }
    }
    unit_variance_columns(&mut coords);

    let params = ManifoldParams {
        method: "lle".into(),
        k,
        m,
        regularization: reg,
        solver: solver.into(),
        mutualized: false,
        residual_tol: 1e-8,
    };
    let mut provenance_params = BTreeMap::new();
    provenance_params.insert("k".into(), k.to_string());
    provenance_params.insert("m".into(), m.to_string());
    provenance_params.insert("reg".into(), crate::textio::fmt_f64(reg));
    provenance_params.insert("solver".into(), solver.to_string());
    provenance_params.insert("mutualized".into(), "false".into());
    let mut embedding = Embedding {
        ids: x.ids.clone(),
        coords,
        provenance: Provenance {
            method: "lle".into(),
            params: provenance_params,
            seed: None,
            source_hash: x.content_hash(),
            sign_flips: Vec::new(),
        },
    };
    embedding.orient_columns(meta);

    Ok(LleResult {
        weights,
        embedding,
        bottom_eigenvalues,
        params,
    })
}

/// M = (I-W)ᵀ(I-W) accumulated densely.
fn accumulate_m_dense(weights: &[Vec<(usize, f64)>], m: &mut Array2<f64>) {
    let n = weights.len();
    for i in 0..n {
        m[(i, i)] += 1.0;
        for &(j, wij) in &weights[i] {
            m[(i, j)] -= wij;
            m[(j, i)] -= wij;
            for &(l, wil) in &weights[i] {
                m[(j, l)] += wij * wil;
            }
        }
    }
}

fn build_m_sparse(weights: &[Vec<(usize, f64)>], n: usize) -> linalg::SparseSym {
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for i in 0..n {
        *rows[i].entry(i).or_insert(0.0) += 1.0;
        for &(j, wij) in &weights[i] {
            *rows[i].entry(j).or_insert(0.0) -= wij;
            *rows[j].entry(i).or_insert(0.0) -= wij;
            for &(l, wil) in &weights[i] {
                *rows[j].entry(l).or_insert(0.0) += wij * wil;
            }
        }
    }
    let mut indptr = vec![0usize];
    let mut indices = Vec::new();
    let mut data = Vec::new();
    for row in rows {
        for (j, v) in row {
            indices.push(j);
            data.push(v);
        }
        indptr.push(indices.len());
    }
    linalg::SparseSym {
        n,
        indptr,
        indices,
        data,
    }
}

/// Laplacian eigenmaps on the mutualized kNN graph with heat-kernel
/// weights (bandwidth = median edge distance) and the normalized graph
/// Laplacian.
pub fn laplacian_embed(
    x: &ActivationSet,
    k: usize,
    m: usize,
    meta: Option<&[PaintingMeta]>,
) -> Result<LaplacianResult> {
    let n = x.n();
    if m == 0 {
        return Err(Error::DimensionMismatch("m must be >= 1".into()));
    }
    let graph = knn_graph(x, k)?;
    let components = graph.components();
    if components > 1 {
        return Err(Error::DisconnectedGraph { components });
    }

    // Mutualize: union of directed edges.
    let mut adjacency: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut all_dists: Vec<f64> = Vec::new();
    for i in 0..n {
        for (&j, &d) in graph.neighbors[i].iter().zip(graph.distances[i].iter()) {
            adjacency[i].entry(j).or_insert(d);
            adjacency[j].entry(i).or_insert(d);
            all_dists.push(d);
        }
    }
    all_dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = all_dists.len() / 2;
    let bandwidth = if all_dists.len() % 2 == 1 {
        all_dists[mid]
    } else {
        0.5 * (all_dists[mid - 1] + all_dists[mid])
    };
    let bandwidth = if bandwidth > 0.0 { bandwidth } else { 1.0 };

    let mut weights: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut degree = vec![0.0; n];
    for i in 0..n {
        for (&j, &d) in &adjacency[i] {
            let w = (-d * d / (2.0 * bandwidth * bandwidth)).exp();
            weights[i].insert(j, w);
            degree[i] += w;
        }
    }
    // Normalized Laplacian L = I - D^{-1/2} W D^{-1/2}.
    let build_rows = || {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for i in 0..n {
            rows[i].insert(i, 1.0);
            for (&j, &w) in &weights[i] {
                let v = -w / (degree[i] * degree[j]).sqrt();
                *rows[i].entry(j).or_insert(0.0) += v;
            }
        }
        rows
    };

    let solver;
    let (bottom_eigenvalues, vectors) = if n <= DENSE_LIMIT {
        solver = "dense";
        let mut lap = Array2::zeros((n, n));
        for (i, row) in build_rows().into_iter().enumerate() {
            for (j, v) in row {
                lap[(i, j)] += v;
            }
        }
        // Symmetrize rounding noise.
        let lap = (&lap + &lap.t()) * 0.5;
        linalg::bottom_eigs_dense(&lap, m + 1)?
    } else {
        solver = "shift-invert";
        let rows = build_rows();
        let mut indptr = vec![0usize];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for row in rows {
            for (j, v) in row {
                indices.push(j);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        let sparse = linalg::SparseSym {
            n,
            indptr,
            indices,
            data,
        };
        linalg::bottom_eigs_sparse(&sparse, m + 1, 1e-8)?
    };

    // Back to the generalized eigenvectors: y = D^{-1/2} u.
    let mut coords = Array2::zeros((n, m));
    for j in 0..m {
        for i in 0..n {
            coords[(i, j)] = vectors[(i, j + 1)] / degree[i].sqrt();
        }
    }
    unit_variance_columns(&mut coords);

    let params = ManifoldParams {
        method: "laplacian".into(),
        k,
        m,
        regularization: 0.0,
        solver: solver.into(),
        mutualized: true,
        residual_tol: 1e-8,
    };
    let mut provenance_params = BTreeMap::new();
    provenance_params.insert("k".into(), k.to_string());
    provenance_params.insert("m".into(), m.to_string());
    provenance_params.insert("bandwidth".into(), crate::textio::fmt_f64(bandwidth));
    provenance_params.insert("solver".into(), solver.to_string());
    provenance_params.insert("mutualized".into(), "true".into());
    let mut embedding = Embedding {
        ids: x.ids.clone(),
        coords,
        provenance: Provenance {
            method: "laplacian".into(),
            params: provenance_params,
            seed: None,
            source_hash: x.content_hash(),
            sign_flips: Vec::new(),
        },
    };
    embedding.orient_columns(meta);

    Ok(LaplacianResult {
        embedding,
        bottom_eigenvalues,
        params,
        bandwidth,
    })
}

/// Serializes sparse weights as `row col weight` lines sorted by (row,
/// col), 17 significant digits.
pub fn weights_to_coo_string(weights: &[Vec<(usize, f64)>]) -> String {
    let mut out = String::new();
    for (i, row) in weights.iter().enumerate() {
        let mut entries: Vec<(usize, f64)> = row.clone();
        entries.sort_by_key(|&(j, _)| j);
        for (j, w) in entries {
            out.push_str(&format!("{i} {j} {}\n", crate::textio::fmt_f64(w)));
        }
    }
    out
}
