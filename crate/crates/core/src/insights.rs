//! Higher-level diagnostics on embeddings and neighbor graphs:
//! representative-artist extraction, bridge scoring, temporal smoothness,
//! and side-by-side subspace comparisons.
//!
//! The extremity score used for representatives is one formalization of
//! "extreme along the style's direction"; the chosen construction
//! (centroid-difference axis, mean of an artist's top-q extremities) is
//! recorded in every report so alternatives can be compared later.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset::{ActivationSet, PaintingMeta};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::linalg::seeded_rng;
use crate::manifold::KnnGraph;
use crate::pca;

/// Direction from the global centroid toward a style's centroid.
#[derive(Debug, Clone, Serialize)]
pub struct StyleAxis {
    pub style: String,
    pub direction: Vec<f64>,
    pub support: usize,
}

/// One artist's rank entry for a style.
#[derive(Debug, Clone, Serialize)]
pub struct ArtistRank {
    pub artist: String,
    /// Mean of the artist's top-q extremities along the style axis.
    pub score: f64,
    /// The paintings behind the score: (id, extremity), descending.
    pub extreme_paintings: Vec<(String, f64)>,
}

fn join<'m>(
    emb_ids: &[String],
    meta: &'m [PaintingMeta],
) -> Result<Vec<&'m PaintingMeta>> {
    let index: BTreeMap<&str, &PaintingMeta> = meta.iter().map(|m| (m.id.as_str(), m)).collect();
    emb_ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::DimensionMismatch(format!("no metadata for id `{id}`")))
        })
        .collect()
}

/// Builds the unit axis from the global centroid toward the centroid of
/// `style`.
pub fn style_axis(emb: &Embedding, meta: &[PaintingMeta], style: &str) -> Result<StyleAxis> {
    let joined = join(&emb.ids, meta)?;
    let n = emb.n();
    let m = emb.m();
    let mut global = vec![0.0; m];
    let mut style_centroid = vec![0.0; m];
    let mut support = 0usize;
    for i in 0..n {
        for j in 0..m {
            global[j] += emb.coords[(i, j)];
        }
        if joined[i].style == style {
            for j in 0..m {
                style_centroid[j] += emb.coords[(i, j)];
            }
            support += 1;
        }
    }
    if support == 0 {
        return Err(Error::UnknownStyle(style.to_string()));
    }
    let mut direction = vec![0.0; m];
    for j in 0..m {
        direction[j] = style_centroid[j] / support as f64 - global[j] / n as f64;
    }
    let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    for v in direction.iter_mut() {
        *v /= norm;
    }
    Ok(StyleAxis {
        style: style.to_string(),
        direction,
        support,
    })
}

/// Ranks artists by how extreme their work lies along the style's axis.
/// An artist's score is the mean of their top-q extremities.
pub fn representatives(
    emb: &Embedding,
    meta: &[PaintingMeta],
    style: &str,
    q: usize,
) -> Result<(StyleAxis, Vec<ArtistRank>)> {
    if q == 0 {
        return Err(Error::TooFewPaintings {
            style: style.to_string(),
            needed: 1,
            got: 0,
        });
    }
    let axis = style_axis(emb, meta, style)?;
    if axis.support < q {
        return Err(Error::TooFewPaintings {
            style: style.to_string(),
            needed: q,
            got: axis.support,
        });
    }
    let joined = join(&emb.ids, meta)?;
    let n = emb.n();
    let m = emb.m();
    let mut global = vec![0.0; m];
    for i in 0..n {
        for j in 0..m {
            global[j] += emb.coords[(i, j)] / n as f64;
        }
    }
    let mut per_artist: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
    for i in 0..n {
        let mut extremity = 0.0;
        for j in 0..m {
            extremity += (emb.coords[(i, j)] - global[j]) * axis.direction[j];
        }
        per_artist
            .entry(joined[i].artist.as_str())
            .or_default()
            .push((emb.ids[i].clone(), extremity));
    }
    let mut ranks: Vec<ArtistRank> = per_artist
        .into_iter()
        .map(|(artist, mut paintings)| {
            paintings.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let take = q.min(paintings.len());
            let score =
                paintings[..take].iter().map(|&(_, e)| e).sum::<f64>() / take as f64;
            paintings.truncate(take);
            ArtistRank {
                artist: artist.to_string(),
                score,
                extreme_paintings: paintings,
            }
        })
        .collect();
    ranks.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.artist.cmp(&b.artist))
    });
    Ok((axis, ranks))
}

/// Bridge diagnostics for one painting: how stylistically mixed and
/// temporally spread its activation-space neighborhood is.
#[derive(Debug, Clone, Serialize)]
pub struct BridgeScore {
    pub id: String,
    /// Entropy (nats) of the neighbor style distribution.
    pub neighbor_style_entropy: f64,
    /// Median |year gap| to dated neighbors; None when the painting or all
    /// its neighbors lack years.
    pub median_year_gap: Option<f64>,
    /// Product of the min-max-normalized entropy and gap factors.
    pub score: f64,
    pub year_missing: bool,
}

/// Scores every painting by neighbor-style entropy times median year gap,
/// each min-max normalized over the dataset. Paintings without a usable
/// year gap contribute a zero gap factor and are flagged.
pub fn bridge_scores(
    graph: &KnnGraph,
    ids: &[String],
    meta: &[PaintingMeta],
) -> Result<Vec<BridgeScore>> {
    if ids.len() != graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} ids for a graph over {} rows",
            ids.len(),
            graph.n()
        )));
    }
    let joined = join(ids, meta)?;
    if !joined.iter().any(|m| m.year.is_some()) {
        return Err(Error::MissingYears);
    }
    let n = graph.n();
    let mut entropies = Vec::with_capacity(n);
    let mut gaps: Vec<Option<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &j in &graph.neighbors[i] {
            *counts.entry(joined[j].style.as_str()).or_insert(0) += 1;
        }
        let k = graph.neighbors[i].len() as f64;
        let entropy: f64 = counts
            .values()
            .map(|&c| {
                let p = c as f64 / k;
                -p * p.ln()
            })
            .sum();
        entropies.push(entropy);

        let gap = joined[i].year.and_then(|yi| {
            let mut diffs: Vec<f64> = graph.neighbors[i]
                .iter()
                .filter_map(|&j| joined[j].year.map(|yj| (yi - yj).abs() as f64))
                .collect();
            if diffs.is_empty() {
                None
            } else {
                diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mid = diffs.len() / 2;
                Some(if diffs.len() % 2 == 1 {
                    diffs[mid]
                } else {
                    0.5 * (diffs[mid - 1] + diffs[mid])
                })
            }
        });
        gaps.push(gap);
    }

    let min_max = |values: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    let (h_lo, h_hi) = min_max(&mut entropies.iter().copied());
    let (g_lo, g_hi) = min_max(&mut gaps.iter().filter_map(|g| *g));
    let norm = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };

    let mut scores: Vec<BridgeScore> = (0..n)
        .map(|i| {
            let nh = norm(entropies[i], h_lo, h_hi);
            let (ng, missing) = match gaps[i] {
                Some(g) => (norm(g, g_lo, g_hi), false),
                None => (0.0, true),
            };
            BridgeScore {
                id: ids[i].clone(),
                neighbor_style_entropy: entropies[i],
                median_year_gap: gaps[i],
                score: nh * ng,
                year_missing: missing,
            }
        })
        .collect();
    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.id.cmp(&b.id))
    });
    Ok(scores)
}

/// Mean |year gap| along graph edges against a permutation baseline.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub mean_gap: f64,
    pub baseline_gap: f64,
    /// mean_gap / baseline_gap; below 1 means temporally smooth.
    pub ratio: f64,
    pub permutations: usize,
    pub edges_used: usize,
    pub seed: u64,
}

/// Compares the mean |year difference| over graph edges with the same
/// statistic under 100 seeded random permutations of the years.
pub fn temporal_smoothness(
    graph: &KnnGraph,
    ids: &[String],
    meta: &[PaintingMeta],
    seed: u64,
) -> Result<SmoothnessReport> {
    const PERMUTATIONS: usize = 100;
    if ids.len() != graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} ids for a graph over {} rows",
            ids.len(),
            graph.n()
        )));
    }
    let joined = join(ids, meta)?;
    let years: Vec<Option<f64>> = joined.iter().map(|m| m.year.map(|y| y as f64)).collect();
    let dated = years.iter().filter(|y| y.is_some()).count();
    if dated < 10 {
        return Err(Error::MissingYears);
    }

    let edge_stat = |years: &[Option<f64>]| -> (f64, usize) {
        let mut total = 0.0;
        let mut count = 0usize;
        for (i, nbs) in graph.neighbors.iter().enumerate() {
            if let Some(yi) = years[i] {
                for &j in nbs {
                    if let Some(yj) = years[j] {
                        total += (yi - yj).abs();
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            (0.0, 0)
        } else {
            (total / count as f64, count)
        }
    };
    let (mean_gap, edges_used) = edge_stat(&years);
    if edges_used == 0 {
        return Err(Error::MissingYears);
    }

    // Permute year values among the dated rows only.
    let dated_rows: Vec<usize> = (0..years.len()).filter(|&i| years[i].is_some()).collect();
    let mut rng = seeded_rng(seed);
    let mut baseline_total = 0.0;
    let mut pool: Vec<f64> = dated_rows.iter().map(|&i| years[i].unwrap()).collect();
    let mut permuted = years.clone();
    for _ in 0..PERMUTATIONS {
        // Fisher-Yates.
        use rand::Rng;
        for i in (1..pool.len()).rev() {
            let j = rng.random_range(0..=i);
            pool.swap(i, j);
        }
        for (slot, &row) in dated_rows.iter().enumerate() {
            permuted[row] = Some(pool[slot]);
        }
        baseline_total += edge_stat(&permuted).0;
    }
    let baseline_gap = baseline_total / PERMUTATIONS as f64;
    let ratio = if baseline_gap == 0.0 {
        0.0
    } else {
        mean_gap / baseline_gap
    };
    Ok(SmoothnessReport {
        mean_gap,
        baseline_gap,
        ratio,
        permutations: PERMUTATIONS,
        edges_used,
        seed,
    })
}

/// One row of the side-by-side subspace comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SubspaceRow {
    pub label: String,
    /// Ambient dimension (node count of the layer).
    pub nodes: usize,
    pub subspace_dim_95: Option<usize>,
    pub retained_variance_2: Option<f64>,
    pub error: Option<String>,
}

/// Computes (node count, subspace dim at 95%, variance retained by the
/// first two modes) for each labeled activation set. Degenerate sets get
/// an error marker instead of failing the whole table.
pub fn subspace_report(pairs: &[(String, &ActivationSet)]) -> Vec<SubspaceRow> {
    pairs
        .iter()
        .map(|(label, set)| {
            let nodes = set.d();
            match pca::fit_spectrum(set) {
                Ok((eigenvalues, _)) => {
                    let dim = pca::subspace_dim_of(&eigenvalues, 0.95).ok();
                    let k = 2.min(eigenvalues.len());
                    let retained = pca::retained_variance_of(&eigenvalues, k).ok();
                    SubspaceRow {
                        label: label.clone(),
                        nodes,
                        subspace_dim_95: dim,
                        retained_variance_2: retained,
                        error: None,
                    }
                }
                Err(e) => SubspaceRow {
                    label: label.clone(),
                    nodes,
                    subspace_dim_95: None,
                    retained_variance_2: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
