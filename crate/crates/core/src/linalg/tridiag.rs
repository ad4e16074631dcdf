//! Bottom-of-spectrum eigenpairs of large symmetric matrices.
//!
//! Dense path: Householder tridiagonalization, bisection on the Sturm
//! count, inverse iteration, back-transform. Used for embedding operators
//! up to n = 4000. Above that a shift-invert subspace iteration with a
//! conjugate-gradient inner solver works on a sparse representation.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Householder reduction A -> Q T Q^T. Returns (diag, offdiag, reflectors);
/// `offdiag[i]` couples rows i-1 and i. The reflector for step k lives in
/// `reflectors` as a unit vector over indices k+1..n.
struct Tridiagonal {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    reflectors: Vec<Vec<f64>>,
}

fn householder_tridiagonalize(a: &mut [f64], n: usize) -> Tridiagonal {
    let mut offdiag = vec![0.0; n];
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1; // length of the column below the diagonal
        let mut x = vec![0.0; m];
        for i in 0..m {
            x[i] = a[(k + 1 + i) * n + k];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            offdiag[k + 1] = 0.0;
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|w| w * w).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            offdiag[k + 1] = alpha;
            reflectors.push(Vec::new());
            continue;
        }
        for w in v.iter_mut() {
            *w /= vnorm;
        }

        // w = A_sub v over the trailing block, rows are contiguous.
        let mut w = vec![0.0; m];
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let mut acc = 0.0;
            for j in 0..m {
                acc += row[j] * v[j];
            }
            w[i] = acc;
        }
        let beta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        // u = w - beta v;  A_sub -= 2 v u^T + 2 u v^T
        let u: Vec<f64> = w.iter().zip(&v).map(|(wi, vi)| wi - beta * vi).collect();
        for i in 0..m {
            let vi = v[i];
            let ui = u[i];
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..m {
                row[j] -= 2.0 * (vi * u[j] + ui * v[j]);
            }
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha;
        for i in 1..m {
            a[(k + 1 + i) * n + k] = 0.0;
            a[k * n + k + 1 + i] = 0.0;
        }
        offdiag[k + 1] = alpha;
        reflectors.push(v);
    }
    if n >= 2 {
        offdiag[n - 1] = a[(n - 1) * n + n - 2];
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    Tridiagonal {
        diag,
        offdiag,
        reflectors,
    }
}

impl Tridiagonal {
    /// x <- Q x, mapping a tridiagonal-basis vector back to the original basis.
    fn apply_q(&self, x: &mut [f64]) {
        let n = x.len();
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let seg = &mut x[k + 1..n];
            let dot: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
            for (s, vi) in seg.iter_mut().zip(v.iter()) {
                *s -= 2.0 * dot * vi;
            }
        }
    }
}

/// Number of eigenvalues of the tridiagonal matrix strictly less than x
/// (Sturm sequence count).
fn sturm_count(diag: &[f64], offdiag: &[f64], x: f64) -> usize {
    let n = diag.len();
    let tiny = f64::MIN_POSITIVE;
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let e2 = offdiag[i] * offdiag[i];
        let denom = if q.abs() < tiny {
            if q < 0.0 {
                -tiny
            } else {
                tiny
            }
        } else {
            q
        };
        q = diag[i] - x - e2 / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The j-th smallest eigenvalue (0-based) by bisection on the Sturm count.
fn bisect_eigenvalue(diag: &[f64], offdiag: &[f64], j: usize, lo0: f64, hi0: f64) -> f64 {
    let mut lo = lo0;
    let mut hi = hi0;
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count(diag, offdiag, mid) >= j + 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves (T - lambda I) x = b for a tridiagonal T via three-band LU with
/// partial pivoting (one superdiagonal of fill-in). Returns false when the
/// solve blows up.
fn tridiag_shifted_solve(
    diag: &[f64],
    offdiag: &[f64],
    lambda: f64,
    b: &[f64],
    x: &mut [f64],
) -> bool {
    let n = diag.len();
    let mut a0: Vec<f64> = diag.iter().map(|d| d - lambda).collect(); // col i
    let mut a1 = vec![0.0; n]; // col i+1
    let mut a2 = vec![0.0; n]; // col i+2 (fill-in)
    let mut lower = vec![0.0; n]; // subdiagonal, col i of row i+1
    for i in 0..n.saturating_sub(1) {
        a1[i] = offdiag[i + 1];
        lower[i] = offdiag[i + 1];
    }
    let mut rhs = b.to_vec();

    let scale = diag
        .iter()
        .chain(offdiag.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);
    let eps = scale * 1e-18;
    let clamp = |v: f64| {
        if v.abs() < eps {
            if v < 0.0 {
                -eps
            } else {
                eps
            }
        } else {
            v
        }
    };

    for i in 0..n.saturating_sub(1) {
        if lower[i].abs() > a0[i].abs() {
            // Swap rows i and i+1 column by column.
            std::mem::swap(&mut a0[i], &mut lower[i]);
            let t = a1[i];
            a1[i] = a0[i + 1];
            a0[i + 1] = t;
            let t = a2[i];
            a2[i] = a1[i + 1];
            a1[i + 1] = t;
            rhs.swap(i, i + 1);
        }
        let p = clamp(a0[i]);
        let m = lower[i] / p;
        a0[i + 1] -= m * a1[i];
        a1[i + 1] -= m * a2[i];
        rhs[i + 1] -= m * rhs[i];
    }

    for i in (0..n).rev() {
        let mut acc = rhs[i];
        if i + 1 < n {
            acc -= a1[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= a2[i] * x[i + 2];
        }
        x[i] = acc / clamp(a0[i]);
        if !x[i].is_finite() {
            return false;
        }
    }
    true
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// All eigenvalues (ascending) by Householder reduction and bisection on
/// the Sturm count. No eigenvectors; scales to dimensions where the
/// rotation-based solver is too slow.
pub(crate) fn eigenvalues_all_buf(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let tri = householder_tridiagonalize(&mut a, n);
    drop(a);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let e_prev = tri.offdiag[i].abs();
        let e_next = if i + 1 < n {
            tri.offdiag[i + 1].abs()
        } else {
            0.0
        };
        lo = lo.min(tri.diag[i] - e_prev - e_next);
        hi = hi.max(tri.diag[i] + e_prev + e_next);
    }
    let span = (hi - lo).max(1.0);
    lo -= 1e-10 * span;
    hi += 1e-10 * span;
    (0..n)
        .map(|j| bisect_eigenvalue(&tri.diag, &tri.offdiag, j, lo, hi))
        .collect()
}

/// Bottom `count` eigenpairs (ascending) of a dense symmetric matrix given
/// as a row-major buffer. Eigenvectors are returned as columns.
pub(crate) fn bottom_eigs_dense_buf(
    mut a: Vec<f64>,
    n: usize,
    count: usize,
) -> Result<(Vec<f64>, Array2<f64>)> {
    assert!(count <= n);
    let tri = householder_tridiagonalize(&mut a, n);
    drop(a);

    // Gershgorin bounds for the tridiagonal matrix.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let e_prev = tri.offdiag[i].abs();
        let e_next = if i + 1 < n {
            tri.offdiag[i + 1].abs()
        } else {
            0.0
        };
        lo = lo.min(tri.diag[i] - e_prev - e_next);
        hi = hi.max(tri.diag[i] + e_prev + e_next);
    }
    let span = (hi - lo).max(1.0);
    lo -= 1e-10 * span;
    hi += 1e-10 * span;

    let scale = tri
        .diag
        .iter()
        .chain(tri.offdiag.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1.0);

    let mut values = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1234_abcd_0001);

    for j in 0..count {
        let lambda = bisect_eigenvalue(&tri.diag, &tri.offdiag, j, lo, hi);
        // Inverse iteration on the tridiagonal matrix.
        let mut v = vec![0.0; n];
        let mut ok = false;
        'attempt: for attempt in 0..4 {
            let mut b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            // Perturb the shift slightly on retries to step off exact
            // singularity.
            let shift = lambda + scale * 1e-12 * attempt as f64;
            normalize(&mut b);
            for _ in 0..5 {
                if !tridiag_shifted_solve(&tri.diag, &tri.offdiag, shift, &b, &mut v) {
                    continue 'attempt;
                }
                // Orthogonalize against previously found vectors of nearby
                // eigenvalues to split clusters.
                for (vi, li) in vectors.iter().zip(values.iter()) {
                    let li: &f64 = li;
                    if (li - lambda).abs() <= 1e-6 * scale {
                        let dot: f64 = vi.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                        for (x, y) in v.iter_mut().zip(vi.iter()) {
                            *x -= dot * y;
                        }
                    }
                }
                if normalize(&mut v) == 0.0 {
                    continue 'attempt;
                }
                b.copy_from_slice(&v);
            }
            // Residual check against the tridiagonal operator.
            let mut resid = 0.0f64;
            for i in 0..n {
                let mut t = (tri.diag[i] - lambda) * v[i];
                if i > 0 {
                    t += tri.offdiag[i] * v[i - 1];
                }
                if i + 1 < n {
                    t += tri.offdiag[i + 1] * v[i + 1];
                }
                resid = resid.max(t.abs());
            }
            if resid <= 1e-8 * scale {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::SolverFailure(format!(
                "inverse iteration failed for eigenvalue index {j}"
            )));
        }
        values.push(lambda);
        vectors.push(v);
    }

    // Back-transform to the original basis and re-orthonormalize.
    for v in vectors.iter_mut() {
        tri.apply_q(v);
    }
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0];
        for u in done.iter() {
            let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u.iter()) {
                *x -= dot * y;
            }
        }
        normalize(v);
    }

    let mut out = Array2::zeros((n, count));
    for (j, v) in vectors.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = v[i];
        }
    }
    Ok((values, out))
}

/// Symmetric sparse matrix in row-compressed form.
pub struct SparseSym {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl SparseSym {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for idx in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[idx] * x[self.indices[idx]];
            }
            y[i] = acc;
        }
    }

    pub fn inf_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            let row: f64 = (self.indptr[i]..self.indptr[i + 1])
                .map(|idx| self.data[idx].abs())
                .sum();
            m = m.max(row);
        }
        m
    }
}

/// Conjugate gradient for (A - sigma I) x = b with A sparse symmetric and
/// sigma below the spectrum.
fn cg_shifted(a: &SparseSym, sigma: f64, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> bool {
    let n = a.n;
    let mut r = vec![0.0; n];
    let mut ax = vec![0.0; n];
    x.iter_mut().for_each(|v| *v = 0.0);
    r.copy_from_slice(b);
    let mut p = r.clone();
    let mut rs_old: f64 = r.iter().map(|v| v * v).sum();
    let b_norm = rs_old.sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rs_old.sqrt() <= tol * b_norm {
            return true;
        }
        a.matvec(&p, &mut ax);
        for i in 0..n {
            ax[i] -= sigma * p[i];
        }
        let p_ap: f64 = p.iter().zip(&ax).map(|(a, b)| a * b).sum();
        if p_ap <= 0.0 {
            return false;
        }
        let alpha = rs_old / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    rs_old.sqrt() <= tol * b_norm
}

/// Bottom `count` eigenpairs of a sparse symmetric PSD matrix by
/// shift-invert subspace iteration (shift below the spectrum, CG inner
/// solves). Deterministic for a fixed input.
pub(crate) fn bottom_eigs_sparse(
    a: &SparseSym,
    count: usize,
    residual_tol: f64,
    max_outer: usize,
) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.n;
    assert!(count <= n);
    let norm = a.inf_norm().max(1.0);
    let sigma = -1e-4 * norm;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1234_abcd_0002);
    let mut basis: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            normalize(&mut v);
            v
        })
        .collect();

    let mut values = vec![0.0; count];
    let mut tmp = vec![0.0; n];
    for _ in 0..max_outer {
        // Invert each basis vector through (A - sigma I).
        for v in basis.iter_mut() {
            let mut x = vec![0.0; n];
            if !cg_shifted(a, sigma, v, &mut x, 1e-12, 20 * n) {
                return Err(Error::SolverFailure("CG inner solve stalled".into()));
            }
            *v = x;
        }
        // Gram-Schmidt orthonormalization.
        for i in 0..count {
            let (done, rest) = basis.split_at_mut(i);
            let v = &mut rest[0];
            for u in done.iter() {
                let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(u.iter()) {
                    *x -= dot * y;
                }
            }
            if normalize(v) == 0.0 {
                return Err(Error::SolverFailure(
                    "subspace iteration produced a null vector".into(),
                ));
            }
        }
        // Rayleigh quotients + residuals.
        let mut max_resid = 0.0f64;
        for (j, v) in basis.iter().enumerate() {
            a.matvec(v, &mut tmp);
            let lambda: f64 = v.iter().zip(&tmp).map(|(a, b)| a * b).sum();
            values[j] = lambda;
            let resid = tmp
                .iter()
                .zip(v.iter())
                .map(|(av, vi)| (av - lambda * vi).abs())
                .fold(0.0f64, f64::max);
            max_resid = max_resid.max(resid);
        }
        if max_resid <= residual_tol * norm {
            // Sort ascending by eigenvalue for a stable contract.
            let mut order: Vec<usize> = (0..count).collect();
            order.sort_by(|&x, &y| values[x].partial_cmp(&values[y]).unwrap());
            let mut out = Array2::zeros((n, count));
            let mut vals = Vec::with_capacity(count);
            for (col, &j) in order.iter().enumerate() {
                vals.push(values[j]);
                for i in 0..n {
                    out[(i, col)] = basis[j][i];
                }
            }
            return Ok((vals, out));
        }
    }
    Err(Error::DidNotConverge {
        what: "shift-invert subspace iteration".into(),
        iterations: max_outer,
    })
}
