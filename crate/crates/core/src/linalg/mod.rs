//! Self-contained numerical kernels shared by the analysis modules:
//! symmetric eigendecomposition, centering, covariance, small SPD solves,
//! and the seeded random number generator.
//!
//! Every stochastic routine in this crate takes an explicit seed and draws
//! from ChaCha8, a documented counter-based generator with a stable stream
//! for a given seed.

mod jacobi;
mod tridiag;

pub use tridiag::SparseSym;

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Full spectrum of a symmetric matrix. Eigenvalues are non-increasing;
/// eigenvectors are the matching orthonormal columns.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Array2<f64>,
}

/// Seeded generator used for every stochastic operation in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn inf_norm(s: &Array2<f64>) -> f64 {
    s.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_symmetric(s: &Array2<f64>) -> Result<()> {
    let (n, m) = s.dim();
    if n != m {
        return Err(Error::DimensionMismatch(format!(
            "eig_sym needs a square matrix, got {n}x{m}"
        )));
    }
    let scale = s.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max_asym = max_asym.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if max_asym > 1e-9 * scale.max(1e-300) {
        return Err(Error::NotSymmetric { max_asym });
    }
    Ok(())
}

/// Fixes the sign of an eigenvector so its largest-magnitude entry is
/// positive (ties broken by the lowest index).
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Deterministic for identical input. Eigenvalues come out descending;
/// each eigenvector's sign is fixed so its largest-magnitude entry is
/// positive.
pub fn eig_sym(s: &Array2<f64>) -> Result<SymEigResult> {
    check_symmetric(s)?;
    let n = s.nrows();
    // Symmetrize before iterating so the tolerated asymmetry cannot bias
    // the rotations.
    let mut buf = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            buf[i * n + j] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    let out = jacobi::jacobi_eig(buf, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        out.values[b]
            .partial_cmp(&out.values[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        eigenvalues.push(out.values[src]);
        let mut v: Vec<f64> = out.vectors_t[src * n..(src + 1) * n].to_vec();
        canonical_sign(&mut v);
        for i in 0..n {
            eigenvectors[(i, col)] = v[i];
        }
    }
    Ok(SymEigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigendecomposition for covariance-class (positive semidefinite) inputs.
/// Eigenvalues in [-1e-10, 0) are clamped to zero; anything below -1e-10 is
/// rejected.
pub fn eig_sym_psd(s: &Array2<f64>) -> Result<SymEigResult> {
    let mut res = eig_sym(s)?;
    for v in res.eigenvalues.iter_mut() {
        if *v < -1e-10 {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(res)
}

/// Bottom `count` eigenpairs (ascending eigenvalues) of a dense symmetric
/// matrix; eigenvectors as columns.
pub fn bottom_eigs_dense(s: &Array2<f64>, count: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    check_symmetric(s)?;
    let n = s.nrows();
    if count > n {
        return Err(Error::DimensionMismatch(format!(
            "requested {count} eigenpairs from a {n}x{n} matrix"
        )));
    }
    let mut buf = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            buf[i * n + j] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    tridiag::bottom_eigs_dense_buf(buf, n, count)
}

/// Full spectrum (descending) without eigenvectors, via Householder
/// reduction and Sturm bisection. Usable at dimensions well beyond the
/// rotation-based solver.
pub fn sym_eigenvalues_all(s: &Array2<f64>) -> Result<Vec<f64>> {
    check_symmetric(s)?;
    let n = s.nrows();
    let mut buf = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            buf[i * n + j] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    let mut vals = tridiag::eigenvalues_all_buf(buf, n);
    vals.reverse();
    Ok(vals)
}

/// Bottom `count` eigenpairs of a sparse symmetric PSD matrix via
/// shift-invert subspace iteration at residual tolerance `residual_tol`.
pub fn bottom_eigs_sparse(
    m: &SparseSym,
    count: usize,
    residual_tol: f64,
) -> Result<(Vec<f64>, Array2<f64>)> {
    tridiag::bottom_eigs_sparse(m, count, residual_tol, 200)
}

/// Subtracts column means. Returns the centered matrix and the mean row.
pub fn center(x: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let n = x.nrows();
    let mean = x.sum_axis(ndarray::Axis(0)) / n as f64;
    let mut xc = x.clone();
    for mut row in xc.rows_mut() {
        row -= &mean;
    }
    (xc, mean)
}

/// Sample covariance of a centered matrix with the unbiased 1/(n-1)
/// estimator.
pub fn covariance(xc: &Array2<f64>) -> Array2<f64> {
    let n = xc.nrows();
    assert!(n >= 2, "covariance needs at least two rows");
    xc.t().dot(xc) / (n as f64 - 1.0)
}

/// In-place Cholesky solve of a small SPD system `g x = rhs` (row-major
/// k×k buffer). Both buffers are overwritten; `rhs` ends up holding x.
pub fn solve_spd(g: &mut [f64], k: usize, rhs: &mut [f64]) -> Result<()> {
    debug_assert_eq!(g.len(), k * k);
    debug_assert_eq!(rhs.len(), k);
    // Factor G = L L^T.
    for i in 0..k {
        for j in 0..=i {
            let mut sum = g[i * k + j];
            for p in 0..j {
                sum -= g[i * k + p] * g[j * k + p];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::SolverFailure(
                        "Cholesky pivot not positive".into(),
                    ));
                }
                g[i * k + i] = sum.sqrt();
            } else {
                g[i * k + j] = sum / g[j * k + j];
            }
        }
    }
    // Forward then backward substitution.
    for i in 0..k {
        let mut sum = rhs[i];
        for p in 0..i {
            sum -= g[i * k + p] * rhs[p];
        }
        rhs[i] = sum / g[i * k + i];
    }
    for i in (0..k).rev() {
        let mut sum = rhs[i];
        for p in i + 1..k {
            sum -= g[p * k + i] * rhs[p];
        }
        rhs[i] = sum / g[i * k + i];
    }
    Ok(())
}

/// Max-norm of the eigen residual `S v - lambda v` over all pairs, scaled
/// checks live in the test suites.
pub fn eig_residual_inf(s: &Array2<f64>, res: &SymEigResult) -> f64 {
    let n = s.nrows();
    let mut worst = 0.0f64;
    for (j, &lambda) in res.eigenvalues.iter().enumerate() {
        for i in 0..n {
            let mut acc = 0.0;
            for t in 0..n {
                acc += s[(i, t)] * res.eigenvectors[(t, j)];
            }
            worst = worst.max((acc - lambda * res.eigenvectors[(i, j)]).abs());
        }
    }
    worst
}

/// Max deviation of `V^T V` from the identity.
pub fn orthonormality_defect(vectors: &Array2<f64>) -> f64 {
    let vtv = vectors.t().dot(vectors);
    let k = vtv.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((vtv[(i, j)] - target).abs());
        }
    }
    worst
}

pub(crate) fn sym_inf_norm(s: &Array2<f64>) -> f64 {
    inf_norm(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn identity_spectrum() {
        let s = Array2::eye(4);
        let res = eig_sym(&s).unwrap();
        assert_eq!(res.eigenvalues, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(orthonormality_defect(&res.eigenvectors) < 1e-12);
    }

    #[test]
    fn diagonal_spectrum_and_axes() {
        let s = array![[3.0, 0.0], [0.0, 1.0]];
        let res = eig_sym(&s).unwrap();
        assert_eq!(res.eigenvalues, vec![3.0, 1.0]);
        assert_abs_diff_eq!(res.eigenvectors[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(res.eigenvectors[(1, 1)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let s = array![[1.0, 2.0], [0.5, 1.0]];
        assert!(matches!(eig_sym(&s), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn psd_clamps_tiny_negatives() {
        let s = array![[1.0, 0.0], [0.0, -5e-11]];
        let res = eig_sym_psd(&s).unwrap();
        assert_eq!(res.eigenvalues[1], 0.0);
        let s = array![[1.0, 0.0], [0.0, -1e-6]];
        assert!(matches!(
            eig_sym_psd(&s),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn center_simple() {
        let x = array![[1.0], [3.0]];
        let (xc, mean) = center(&x);
        assert_eq!(mean[0], 2.0);
        assert_eq!(xc[(0, 0)], -1.0);
        assert_eq!(xc[(1, 0)], 1.0);
    }

    #[test]
    fn center_recomposition() {
        let mut rng = seeded_rng(7);
        use rand::Rng;
        let x = Array2::from_shape_fn((23, 5), |_| rng.random::<f64>() * 4.0 - 2.0);
        let (xc, mean) = center(&x);
        for j in 0..5 {
            let col_mean: f64 = xc.column(j).sum() / 23.0;
            assert!(col_mean.abs() <= 1e-12);
        }
        for i in 0..23 {
            for j in 0..5 {
                assert!((xc[(i, j)] + mean[j] - x[(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn trace_is_preserved() {
        let mut rng = seeded_rng(11);
        use rand::Rng;
        for n in 2..=8 {
            let mut s = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.random::<f64>() * 2.0 - 1.0;
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            let res = eig_sym(&s).unwrap();
            let trace: f64 = (0..n).map(|i| s[(i, i)]).sum();
            let sum: f64 = res.eigenvalues.iter().sum();
            assert!((trace - sum).abs() <= 1e-8 * sym_inf_norm(&s) * n as f64);
        }
    }

    #[test]
    fn bisection_spectrum_matches_jacobi() {
        let mut rng = seeded_rng(29);
        use rand::Rng;
        let n = 24;
        let mut s = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let jac = eig_sym(&s).unwrap();
        let bis = sym_eigenvalues_all(&s).unwrap();
        for (a, b) in jac.eigenvalues.iter().zip(bis.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn bottom_eigs_match_full_spectrum() {
        let mut rng = seeded_rng(13);
        use rand::Rng;
        let n = 40;
        let mut s = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        let full = eig_sym(&s).unwrap();
        let (vals, vecs) = bottom_eigs_dense(&s, 3).unwrap();
        let mut ascending = full.eigenvalues.clone();
        ascending.reverse();
        for j in 0..3 {
            assert_abs_diff_eq!(vals[j], ascending[j], epsilon = 1e-9);
        }
        // Residual check in the original basis.
        for j in 0..3 {
            let v = vecs.column(j);
            let sv = s.dot(&v);
            for i in 0..n {
                assert!((sv[i] - vals[j] * v[i]).abs() < 1e-8 * sym_inf_norm(&s));
            }
        }
    }

    #[test]
    fn sparse_bottom_eigs_match_dense() {
        // Small PSD matrix: graph Laplacian of a path plus ridge.
        let n = 30;
        let mut dense = Array2::zeros((n, n));
        for i in 0..n {
            dense[(i, i)] = 2.0;
        }
        dense[(0, 0)] = 1.0;
        dense[(n - 1, n - 1)] = 1.0;
        for i in 0..n - 1 {
            dense[(i, i + 1)] = -1.0;
            dense[(i + 1, i)] = -1.0;
        }
        let mut indptr = vec![0usize];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if dense[(i, j)] != 0.0 {
                    indices.push(j);
                    data.push(dense[(i, j)]);
                }
            }
            indptr.push(indices.len());
        }
        let sparse = SparseSym {
            n,
            indptr,
            indices,
            data,
        };
        let (dv, _) = bottom_eigs_dense(&dense, 3).unwrap();
        let (sv, _) = bottom_eigs_sparse(&sparse, 3, 1e-8).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(dv[j], sv[j], epsilon = 1e-6);
        }
    }

    #[test]
    fn solve_spd_small() {
        let mut g = vec![4.0, 1.0, 1.0, 3.0];
        let mut rhs = vec![1.0, 2.0];
        solve_spd(&mut g, 2, &mut rhs).unwrap();
        // [[4,1],[1,3]] x = [1,2] -> x = [1/11, 7/11]
        assert_abs_diff_eq!(rhs[0], 1.0 / 11.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rhs[1], 7.0 / 11.0, epsilon = 1e-12);
    }
}
