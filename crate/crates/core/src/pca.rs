//! Modes-of-variation analysis: principal components of an activation
//! set, the two subspace metrics used in the comparison tables, and
//! projection into the leading modes.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::{ActivationSet, PaintingMeta};
use crate::embedding::{Embedding, Provenance};
use crate::error::{Error, Result};
use crate::linalg;

/// Components with eigenvalue below this fraction of the largest are
/// rounding noise and dropped from the model.
const EIGENVALUE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// k×d matrix with orthonormal rows, descending variance.
    pub components: Array2<f64>,
    /// Matching eigenvalues of the sample covariance, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Trace of the sample covariance (variance over all d coordinates).
    pub total_variance: f64,
    pub provenance: Provenance,
}

fn canonical_row_sign(row: &mut ndarray::ArrayViewMut1<f64>) -> bool {
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
        true
    } else {
        false
    }
}

/// Fits principal components on the sample covariance of the centered
/// activations. Uses the d×d covariance eigenproblem when d <= n and the
/// n×n Gram route otherwise.
pub fn fit_pca(x: &ActivationSet) -> Result<PcaModel> {
    x.validate()?;
    let (n, d) = x.values.dim();
    let (xc, mean) = linalg::center(&x.values);
    let denom = n as f64 - 1.0;
    let total_variance: f64 = xc.iter().map(|v| v * v).sum::<f64>() / denom;
    if total_variance == 0.0 {
        return Err(Error::DegenerateData);
    }

    let (mut eigenvalues, mut components) = if d <= n {
        let cov = xc.t().dot(&xc) / denom;
        let eig = linalg::eig_sym_psd(&cov)?;
        let comp = eig.eigenvectors.t().to_owned();
        (eig.eigenvalues, comp)
    } else {
        // Gram route: eigenvectors of X Xᵀ/(n-1) map to ambient components
        // through Xᵀ u / sqrt((n-1) λ).
        let gram = xc.dot(&xc.t()) / denom;
        let eig = linalg::eig_sym_psd(&gram)?;
        let mut comp = Array2::zeros((n, d));
        for (r, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= 0.0 {
                continue;
            }
            let u = eig.eigenvectors.column(r);
            let dir = xc.t().dot(&u) / (denom * lambda).sqrt();
            for j in 0..d {
                comp[(r, j)] = dir[j];
            }
        }
        (eig.eigenvalues, comp)
    };

    let lambda_max = eigenvalues[0];
    if lambda_max <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let keep = eigenvalues
        .iter()
        .take_while(|&&l| l >= EIGENVALUE_CUTOFF * lambda_max)
        .count()
        .min(components.nrows());
    eigenvalues.truncate(keep);
    let mut components = components.slice_move(ndarray::s![..keep, ..]);
    for mut row in components.rows_mut() {
        canonical_row_sign(&mut row);
    }

    let mut params = BTreeMap::new();
    params.insert("route".into(), if d <= n { "covariance" } else { "gram" }.into());
    params.insert("components".into(), keep.to_string());
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        total_variance,
        provenance: Provenance {
            method: "pca".into(),
            params,
            seed: None,
            source_hash: x.content_hash(),
            sign_flips: Vec::new(),
        },
    })
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn d(&self) -> usize {
        self.components.ncols()
    }

    /// Flips retained components so each one's projection correlates
    /// non-negatively with year; flips are recorded in provenance.
    pub fn orient_by_year(&mut self, x: &ActivationSet, meta: &[PaintingMeta]) -> Result<Vec<bool>> {
        let mut emb = project(self, x, self.k())?;
        let flips = emb.orient_columns(Some(&meta.to_vec()));
        for (r, &flip) in flips.iter().enumerate() {
            if flip {
                for j in 0..self.d() {
                    self.components[(r, j)] = -self.components[(r, j)];
                }
            }
        }
        self.provenance.sign_flips = flips.clone();
        Ok(flips)
    }
}

/// Eigenvalue spectrum of the sample covariance without eigenvectors.
/// Handles layer widths far beyond what the full model fit supports by
/// switching to a bisection eigensolver on the smaller of the covariance
/// and Gram operators.
pub fn fit_spectrum(x: &ActivationSet) -> Result<(Vec<f64>, f64)> {
    x.validate()?;
    let (n, d) = x.values.dim();
    let (xc, _) = linalg::center(&x.values);
    let denom = n as f64 - 1.0;
    let total_variance: f64 = xc.iter().map(|v| v * v).sum::<f64>() / denom;
    if total_variance == 0.0 {
        return Err(Error::DegenerateData);
    }
    let op = if d <= n {
        xc.t().dot(&xc) / denom
    } else {
        xc.dot(&xc.t()) / denom
    };
    // The rotation solver is fine up to the target layer widths; beyond
    // that only the spectrum is needed, so use bisection.
    const JACOBI_LIMIT: usize = 768;
    let mut eigenvalues = if op.nrows() <= JACOBI_LIMIT {
        linalg::eig_sym_psd(&op)?.eigenvalues
    } else {
        let mut vals = linalg::sym_eigenvalues_all(&op)?;
        for v in vals.iter_mut() {
            if *v < -1e-10 {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        vals
    };
    let lambda_max = eigenvalues[0];
    if lambda_max <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let keep = eigenvalues
        .iter()
        .take_while(|&&l| l >= EIGENVALUE_CUTOFF * lambda_max)
        .count();
    eigenvalues.truncate(keep);
    Ok((eigenvalues, total_variance))
}

/// Smallest k with cumulative variance fraction >= threshold, over a
/// descending spectrum.
pub fn subspace_dim_of(eigenvalues: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "threshold {threshold} outside (0, 1]"
        )));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateData);
    }
    let mut cum = 0.0;
    for (i, l) in eigenvalues.iter().enumerate() {
        cum += l;
        if cum / total >= threshold {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Variance fraction of the first k entries of a descending spectrum.
pub fn retained_variance_of(eigenvalues: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > eigenvalues.len() {
        return Err(Error::DimensionMismatch(format!(
            "k={k} outside [1, {}]",
            eigenvalues.len()
        )));
    }
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(eigenvalues.iter().take(k).sum::<f64>() / total)
}

/// Smallest number of leading components whose cumulative variance
/// fraction reaches `threshold`.
pub fn subspace_dim(model: &PcaModel, threshold: f64) -> Result<usize> {
    subspace_dim_of(&model.eigenvalues, threshold)
}

/// Fraction of variance retained by the first `k` components.
pub fn retained_variance(model: &PcaModel, k: usize) -> Result<f64> {
    retained_variance_of(&model.eigenvalues, k)
}

/// Projects activations into the first `k` modes.
pub fn project(model: &PcaModel, x: &ActivationSet, k: usize) -> Result<Embedding> {
    if k == 0 || k > model.k() {
        return Err(Error::DimensionMismatch(format!(
            "k={k} outside [1, {}]",
            model.k()
        )));
    }
    if x.d() != model.d() {
        return Err(Error::DimensionMismatch(format!(
            "activation dimension {} does not match model dimension {}",
            x.d(),
            model.d()
        )));
    }
    let mut xc = x.values.clone();
    for mut row in xc.rows_mut() {
        row -= &model.mean;
    }
    let sub = model.components.slice(ndarray::s![..k, ..]);
    let coords = xc.dot(&sub.t());
    let mut params = BTreeMap::new();
    params.insert("k".into(), k.to_string());
    params.insert("model_hash".into(), model_hash(model));
    Ok(Embedding {
        ids: x.ids.clone(),
        coords,
        provenance: Provenance {
            method: "pca".into(),
            params,
            seed: None,
            source_hash: x.content_hash(),
            sign_flips: model.provenance.sign_flips.clone(),
        },
    })
}

/// Stable hash of a fitted model (mean, components, eigenvalues).
pub fn model_hash(model: &PcaModel) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for v in model.mean.iter() {
        hasher.update(v.to_le_bytes());
    }
    for v in model.components.iter() {
        hasher.update(v.to_le_bytes());
    }
    for v in &model.eigenvalues {
        hasher.update(v.to_le_bytes());
    }
    crate::dataset::hex_digest(hasher)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn acts(values: Array2<f64>) -> ActivationSet {
        let n = values.nrows();
        ActivationSet {
            values,
            ids: (0..n).map(|i| format!("p{i}")).collect(),
            layer_tag: "t".into(),
            model_tag: "t".into(),
        }
    }

    #[test]
    fn line_data_concentrates_variance() {
        // Points along span{(1,1)/sqrt(2)}.
        let v = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [-1.0, -1.0]];
        let model = fit_pca(&acts(v)).unwrap();
        assert_abs_diff_eq!(
            model.eigenvalues[0],
            model.total_variance,
            epsilon = 1e-10
        );
        assert!(model.eigenvalues.len() == 1 || model.eigenvalues[1].abs() < 1e-10);
    }

    #[test]
    fn subspace_dim_examples() {
        let mut model = dummy_model(vec![1.0, 0.0, 0.0]);
        assert_eq!(subspace_dim(&model, 0.95).unwrap(), 1);
        model.eigenvalues = vec![0.5, 0.3, 0.15, 0.05];
        assert_eq!(subspace_dim(&model, 0.95).unwrap(), 3);
        // Exact threshold hit resolves to the smaller k.
        model.eigenvalues = vec![0.95, 0.05];
        assert_eq!(subspace_dim(&model, 0.95).unwrap(), 1);
    }

    #[test]
    fn retained_variance_examples() {
        let model = dummy_model(vec![2.0, 1.0, 1.0]);
        assert_abs_diff_eq!(retained_variance(&model, 2).unwrap(), 0.75, epsilon = 1e-15);
        let model = dummy_model(vec![1.0; 10]);
        assert_abs_diff_eq!(retained_variance(&model, 2).unwrap(), 0.20, epsilon = 1e-15);
    }

    fn dummy_model(eigenvalues: Vec<f64>) -> PcaModel {
        let k = eigenvalues.len();
        let total = eigenvalues.iter().sum();
        PcaModel {
            mean: Array1::zeros(k),
            components: Array2::eye(k),
            eigenvalues,
            total_variance: total,
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn projecting_mean_gives_origin() {
        let v = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 10.0]];
        let model = fit_pca(&acts(v)).unwrap();
        let mean_row = acts(ndarray::stack![
            ndarray::Axis(0),
            model.mean.view(),
            model.mean.view()
        ]);
        let emb = project(&model, &mean_row, model.k()).unwrap();
        for v in emb.coords.iter() {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn full_rank_reconstruction() {
        let mut rng = linalg::seeded_rng(3);
        use rand::Rng;
        let v = Array2::from_shape_fn((12, 4), |_| rng.random::<f64>() * 2.0 - 1.0);
        let set = acts(v.clone());
        let model = fit_pca(&set).unwrap();
        let emb = project(&model, &set, model.k()).unwrap();
        // X ≈ Y · components + mean
        let recon = emb.coords.dot(&model.components) ;
        for i in 0..12 {
            for j in 0..4 {
                let back = recon[(i, j)] + model.mean[j];
                assert!((back - v[(i, j)]).abs() < 1e-6 * v[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn reconstruction_error_non_increasing_in_k() {
        let mut rng = linalg::seeded_rng(5);
        use rand::Rng;
        let v = Array2::from_shape_fn((20, 6), |_| rng.random::<f64>() * 2.0 - 1.0);
        let set = acts(v.clone());
        let model = fit_pca(&set).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=model.k() {
            let emb = project(&model, &set, k).unwrap();
            let recon = emb.coords.dot(&model.components.slice(ndarray::s![..k, ..]));
            let mut err = 0.0;
            for i in 0..20 {
                for j in 0..6 {
                    let diff = recon[(i, j)] + model.mean[j] - v[(i, j)];
                    err += diff * diff;
                }
            }
            assert!(err <= last + 1e-12);
            last = err;
        }
    }

    #[test]
    fn gram_route_matches_covariance_route() {
        // n < d forces the Gram route; compare against the covariance route
        // on the transposed problem by checking spectra and projections.
        let mut rng = linalg::seeded_rng(8);
        use rand::Rng;
        let v = Array2::from_shape_fn((5, 9), |_| rng.random::<f64>() * 2.0 - 1.0);
        let set = acts(v.clone());
        let model = fit_pca(&set).unwrap();
        assert_eq!(model.provenance.params["route"], "gram");
        // Rows are orthonormal.
        for a in 0..model.k() {
            for b in 0..model.k() {
                let dot: f64 = (0..9)
                    .map(|j| model.components[(a, j)] * model.components[(b, j)])
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((dot - target).abs() < 1e-8, "rows {a},{b}: {dot}");
            }
        }
        // Eigenvalues match the covariance spectrum.
        let (xc, _) = linalg::center(&v);
        let cov = xc.t().dot(&xc) / 4.0;
        let eig = linalg::eig_sym_psd(&cov).unwrap();
        for (a, b) in model.eigenvalues.iter().zip(eig.eigenvalues.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_data_rejected() {
        let v = Array2::from_elem((4, 3), 2.5);
        assert!(matches!(fit_pca(&acts(v)), Err(Error::DegenerateData)));
    }

    #[test]
    fn dimension_mismatch_on_project() {
        let v = array![[1.0, 2.0], [3.0, 4.0], [5.0, 7.0]];
        let model = fit_pca(&acts(v)).unwrap();
        let other = acts(array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert!(matches!(
            project(&model, &other, 1),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
