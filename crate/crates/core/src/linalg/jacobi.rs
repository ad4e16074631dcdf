//! Cyclic Jacobi rotations for the full spectrum of a symmetric matrix.
//!
//! Row-major buffers throughout; the eigenvector accumulator is kept
//! transposed (rows are eigenvectors) so every rotation touches two
//! contiguous rows.

use crate::error::{Error, Result};

pub(crate) struct JacobiOutput {
    /// Unsorted eigenvalues.
    pub values: Vec<f64>,
    /// Row `i` is the eigenvector for `values[i]`.
    pub vectors_t: Vec<f64>,
}

const MAX_SWEEPS: usize = 60;

/// Diagonalizes a symmetric matrix given as a row-major `n*n` buffer.
/// The buffer is consumed as scratch space.
pub(crate) fn jacobi_eig(mut a: Vec<f64>, n: usize) -> Result<JacobiOutput> {
    debug_assert_eq!(a.len(), n * n);
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    if n == 1 {
        return Ok(JacobiOutput {
            values: d,
            vectors_t: vt,
        });
    }
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    let scale: f64 = a.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
    let off_tol = 1e-15 * scale * (n * n) as f64;

    for sweep in 0..MAX_SWEEPS {
        let mut off_sum = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                off_sum += a[p * n + q].abs();
            }
        }
        if off_sum <= off_tol {
            return Ok(JacobiOutput {
                values: d,
                vectors_t: vt,
            });
        }
        // Threshold schedule from the classical algorithm: skip tiny
        // pivots during the first sweeps instead of rotating on noise.
        let tresh = if sweep < 3 {
            0.2 * off_sum / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                // Off-diagonal entry negligible relative to the diagonal:
                // zero it outright.
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                    continue;
                }
                if apq.abs() <= tresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a[p * n + q] = 0.0;
                // Rotate the remaining off-diagonal entries of rows/cols p,q.
                for j in 0..p {
                    let g = a[j * n + p];
                    let h = a[j * n + q];
                    a[j * n + p] = g - s * (h + g * tau);
                    a[j * n + q] = h + s * (g - h * tau);
                }
                for j in p + 1..q {
                    let g = a[p * n + j];
                    let h = a[j * n + q];
                    a[p * n + j] = g - s * (h + g * tau);
                    a[j * n + q] = h + s * (g - h * tau);
                }
                for j in q + 1..n {
                    let g = a[p * n + j];
                    let h = a[q * n + j];
                    a[p * n + j] = g - s * (h + g * tau);
                    a[q * n + j] = h + s * (g - h * tau);
                }
                // Accumulate the rotation into the (transposed) vectors:
                // rows p and q are contiguous.
                let (head, tail) = vt.split_at_mut(q * n);
                let row_p = &mut head[p * n..p * n + n];
                let row_q = &mut tail[..n];
                for j in 0..n {
                    let g = row_p[j];
                    let h = row_q[j];
                    row_p[j] = g - s * (h + g * tau);
                    row_q[j] = h + s * (g - h * tau);
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }

    Err(Error::DidNotConverge {
        what: "Jacobi eigensolver".into(),
        iterations: MAX_SWEEPS,
    })
}
