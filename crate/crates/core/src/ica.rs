//! FastICA factorization of the leading PCA subspace into maximally
//! independent components, plus per-component style alignment summaries.
//!
//! Fixed-point iteration with the tanh (log-cosh family) contrast and
//! symmetric decorrelation each sweep. Non-convergence is reported as a
//! flag on the model, not a hard error: activation data can be close to
//! Gaussian along some directions.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ActivationSet, PaintingMeta};
use crate::error::{Error, Result};
use crate::linalg::{self, seeded_rng};
use crate::pca;

/// E[log cosh X] for X ~ N(0,1); the log-cosh objective measures distance
/// from this value.
pub const GAUSSIAN_LOGCOSH: f64 = 0.374567207491437974;

/// Whitening transform: composes centering with projection onto the
/// leading PCA subspace scaled to identity covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Whitening {
    pub mean: Array1<f64>,
    /// k×d: whitened = (x - mean) · matrixᵀ.
    pub matrix: Array2<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Projects activations onto the top-k PCA subspace with unit covariance.
pub fn whiten(x: &ActivationSet, k: usize) -> Result<(Array2<f64>, Whitening)> {
    let model = pca::fit_pca(x)?;
    let lambda_max = model.eigenvalues[0];
    let rank = model
        .eigenvalues
        .iter()
        .take_while(|&&l| l >= 1e-10 * lambda_max)
        .count();
    if k == 0 || k > rank {
        return Err(Error::RankDeficient { requested: k, rank });
    }
    let mut matrix = model
        .components
        .slice(ndarray::s![..k, ..])
        .to_owned();
    for (r, mut row) in matrix.rows_mut().into_iter().enumerate() {
        let scale = 1.0 / model.eigenvalues[r].sqrt();
        row.mapv_inplace(|v| v * scale);
    }
    let mut xc = x.values.clone();
    for mut row in xc.rows_mut() {
        row -= &model.mean;
    }
    let z = xc.dot(&matrix.t());
    Ok((
        z,
        Whitening {
            mean: model.mean,
            matrix,
            eigenvalues: model.eigenvalues[..k].to_vec(),
        },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IcaModel {
    pub whitening: Whitening,
    /// k×k with orthonormal rows (in whitened coordinates).
    pub unmixing: Array2<f64>,
    /// k×d source directions in ambient space (unmixing · whitening).
    pub components: Array2<f64>,
    pub seed: u64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Per-component |E[log cosh s] - E_gauss|, descending.
    pub non_gaussianity: Vec<f64>,
}

/// W <- (W Wᵀ)^(-1/2) W, making the rows exactly orthonormal.
fn sym_decorrelate(w: &Array2<f64>) -> Result<Array2<f64>> {
    let wwt = w.dot(&w.t());
    let eig = linalg::eig_sym(&wwt)?;
    let k = w.nrows();
    let mut scaled = Array2::zeros((k, k));
    for (j, &mu) in eig.eigenvalues.iter().enumerate() {
        let inv_sqrt = 1.0 / mu.max(1e-14).sqrt();
        for i in 0..k {
            scaled[(i, j)] = eig.eigenvectors[(i, j)] * inv_sqrt;
        }
    }
    Ok(scaled.dot(&eig.eigenvectors.t()).dot(w))
}

/// Runs the fixed-point iteration on whitened data. `z` is n×k with unit
/// covariance.
pub fn fast_ica(
    z: &Array2<f64>,
    whitening: &Whitening,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<IcaModel> {
    let (n, k) = z.dim();
    if k == 0 || n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let mut rng = seeded_rng(seed);
    let mut w = Array2::from_shape_fn((k, k), |_| {
        let g: f64 = StandardNormal.sample(&mut rng);
        g
    });
    w = sym_decorrelate(&w)?;

    let mut converged = false;
    let mut iterations_used = max_iter;
    for iter in 0..max_iter {
        // Source estimates for the current unmixing: s = z wᵀ (n×k).
        let s = z.dot(&w.t());
        let g = s.mapv(f64::tanh);
        // E[z g(wᵀz)] per component: (gᵀ z) / n, a k×k matrix.
        let zg = g.t().dot(z) / n as f64;
        // E[g'(wᵀz)] per component.
        let mut w_plus = zg;
        for j in 0..k {
            let mean_gprime: f64 =
                g.column(j).iter().map(|&t| 1.0 - t * t).sum::<f64>() / n as f64;
            for c in 0..k {
                w_plus[(j, c)] -= mean_gprime * w[(j, c)];
            }
        }
        let w_new = sym_decorrelate(&w_plus)?;
        let mut delta = 0.0f64;
        for j in 0..k {
            let dot: f64 = (0..k).map(|c| w_new[(j, c)] * w[(j, c)]).sum();
            delta = delta.max((1.0 - dot.abs()).abs());
        }
        w = w_new;
        if delta < tol {
            converged = true;
            iterations_used = iter + 1;
            break;
        }
    }

    // Order components by descending log-cosh non-Gaussianity; fix signs by
    // the largest-magnitude ambient loading.
    let s = z.dot(&w.t());
    let mut objective: Vec<f64> = (0..k)
        .map(|j| {
            let mean: f64 = s.column(j).iter().map(|v| v.cosh().ln()).sum::<f64>() / n as f64;
            (mean - GAUSSIAN_LOGCOSH).abs()
        })
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        objective[b]
            .partial_cmp(&objective[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut unmixing = Array2::zeros((k, k));
    for (row, &src) in order.iter().enumerate() {
        for c in 0..k {
            unmixing[(row, c)] = w[(src, c)];
        }
    }
    objective = order.iter().map(|&src| objective[src]).collect();

    let mut components = unmixing.dot(&whitening.matrix);
    for mut row in components.rows_mut() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (i, &v) in row.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if row[best] < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }
    // Keep unmixing rows consistent with the ambient sign choice.
    for j in 0..k {
        let recomposed = unmixing.row(j).dot(&whitening.matrix);
        let mut dot = 0.0;
        for (a, b) in recomposed.iter().zip(components.row(j).iter()) {
            dot += a * b;
        }
        if dot < 0.0 {
            for c in 0..k {
                unmixing[(j, c)] = -unmixing[(j, c)];
            }
        }
    }

    Ok(IcaModel {
        whitening: whitening.clone(),
        unmixing,
        components,
        seed,
        iterations_used,
        converged,
        non_gaussianity: objective,
    })
}

/// Convenience: whiten to `k` dimensions and factorize.
pub fn fit_ica(x: &ActivationSet, k: usize, seed: u64) -> Result<IcaModel> {
    let (z, whitening) = whiten(x, k)?;
    fast_ica(&z, &whitening, seed, 1e-6, 500)
}

impl IcaModel {
    pub fn k(&self) -> usize {
        self.unmixing.nrows()
    }

    /// Source values for each painting: (x - mean) · componentsᵀ.
    pub fn sources(&self, x: &ActivationSet) -> Result<Array2<f64>> {
        if x.d() != self.components.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "activation dimension {} does not match model dimension {}",
                x.d(),
                self.components.ncols()
            )));
        }
        let mut xc = x.values.clone();
        for mut row in xc.rows_mut() {
            row -= &self.whitening.mean;
        }
        Ok(xc.dot(&self.components.t()))
    }
}

/// Style alignment summary for one independent component.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentProfile {
    pub component: usize,
    /// Constant components are flagged and excluded from style ranking.
    pub degenerate: bool,
    pub style_means: BTreeMap<String, f64>,
    /// Style with the largest |mean source value|.
    pub top_style: Option<String>,
    /// Top paintings by |source value|: (id, value).
    pub top_paintings: Vec<(String, f64)>,
    /// (year, value) pairs sorted by year for plotting.
    pub year_series: Vec<(i32, f64)>,
}

/// Per-component style summaries over a joined dataset.
pub fn component_style_profile(
    model: &IcaModel,
    x: &ActivationSet,
    meta: &[PaintingMeta],
    q: usize,
) -> Result<Vec<ComponentProfile>> {
    let joined = crate::dataset::join_by_id(meta, x)?;
    let sources = model.sources(x)?;
    let n = x.n();
    let mut profiles = Vec::with_capacity(model.k());
    for j in 0..model.k() {
        let col = sources.column(j);
        let mean: f64 = col.sum() / n as f64;
        let var: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let scale: f64 = col.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        let degenerate = var.sqrt() <= 1e-12 * scale;

        let mut style_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (i, m) in joined.iter().enumerate() {
            let e = style_sums.entry(m.style.clone()).or_insert((0.0, 0));
            e.0 += col[i];
            e.1 += 1;
        }
        let style_means: BTreeMap<String, f64> = style_sums
            .into_iter()
            .map(|(s, (sum, c))| (s, sum / c as f64))
            .collect();
        let top_style = if degenerate {
            None
        } else {
            style_means
                .iter()
                .max_by(|a, b| {
                    a.1.abs()
                        .partial_cmp(&b.1.abs())
                        .unwrap()
                        .then(b.0.cmp(a.0))
                })
                .map(|(s, _)| s.clone())
        };

        let mut ranked: Vec<(String, f64)> = x
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), col[i]))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .unwrap()
                .then(a.0.cmp(&b.0))
        });
        ranked.truncate(q);

        let mut year_series: Vec<(i32, f64)> = joined
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.year.map(|y| (y, col[i])))
            .collect();
        year_series.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()));

        profiles.push(ComponentProfile {
            component: j,
            degenerate,
            style_means,
            top_style,
            top_paintings: ranked,
            year_series,
        });
    }
    Ok(profiles)
}
