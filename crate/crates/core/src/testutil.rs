//! Independent reference implementations used as oracles by the test and
//! acceptance suites. Compiled only with the `testutil` feature; nothing
//! here is part of the library proper, and nothing here may call into the
//! implementation paths it is used to check.

use ndarray::Array2;

/// Characteristic polynomial p(lambda) = det(S - lambda I) evaluated by LU
/// decomposition with partial pivoting.
pub fn char_poly(s: &Array2<f64>, lambda: f64) -> f64 {
    let n = s.nrows();
    let mut a: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            a.push(s[(i, j)] - if i == j { lambda } else { 0.0 });
        }
    }
    let mut det = 1.0f64;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            det = -det;
        }
        det *= a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
        }
    }
    det
}

/// All eigenvalues of a symmetric matrix found as sign-change roots of the
/// characteristic polynomial, refined by bisection. Works when the
/// eigenvalues are distinct (almost surely true for random matrices);
/// panics if the expected root count is not found. Returns them in
/// descending order.
pub fn eigenvalues_by_bisection(s: &Array2<f64>, grid: usize) -> Vec<f64> {
    let n = s.nrows();
    // Gershgorin interval.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum();
        lo = lo.min(s[(i, i)] - radius);
        hi = hi.max(s[(i, i)] + radius);
    }
    let pad = 1e-6 * (hi - lo).max(1.0);
    lo -= pad;
    hi += pad;

    let mut roots = Vec::new();
    let step = (hi - lo) / grid as f64;
    let mut prev_x = lo;
    let mut prev_v = char_poly(s, lo);
    for g in 1..=grid {
        let x = lo + step * g as f64;
        let v = char_poly(s, x);
        if prev_v == 0.0 {
            roots.push(prev_x);
        } else if v != 0.0 && prev_v.signum() != v.signum() {
            // Bisect to convergence.
            let (mut a, mut b) = (prev_x, x);
            let mut fa = prev_v;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid == a || mid == b {
                    break;
                }
                let fm = char_poly(s, mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa.signum() != fm.signum() {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev_v = v;
    }
    assert_eq!(
        roots.len(),
        n,
        "bisection oracle found {} roots for an {n}x{n} matrix; refine the grid",
        roots.len()
    );
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    roots
}

// Double-double (Dekker/Bailey) arithmetic for an extended-precision
// Pearson reference.

#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

fn quick_renorm(hi: f64, lo: f64) -> Dd {
    let s = hi + lo;
    let err = lo - (s - hi);
    Dd { hi: s, lo: err }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd {
        hi: p,
        lo: f64::mul_add(a, b, -p),
    }
}

pub fn dd_add(x: Dd, y: Dd) -> Dd {
    let s = two_sum(x.hi, y.hi);
    quick_renorm(s.hi, s.lo + x.lo + y.lo)
}

pub fn dd_sub(x: Dd, y: Dd) -> Dd {
    dd_add(x, Dd { hi: -y.hi, lo: -y.lo })
}

pub fn dd_mul(x: Dd, y: Dd) -> Dd {
    let p = two_prod(x.hi, y.hi);
    quick_renorm(p.hi, p.lo + x.hi * y.lo + x.lo * y.hi)
}

pub fn dd_div(x: Dd, y: Dd) -> Dd {
    let q1 = x.hi / y.hi;
    let r = dd_sub(x, dd_mul(Dd::from(q1), y));
    let q2 = r.value() / y.hi;
    quick_renorm(q1, q2)
}

pub fn dd_sqrt(x: Dd) -> Dd {
    if x.hi <= 0.0 {
        return Dd::from(x.hi.sqrt());
    }
    let s = x.hi.sqrt();
    let residual = dd_sub(x, dd_mul(Dd::from(s), Dd::from(s)));
    quick_renorm(s, residual.value() / (2.0 * s))
}

/// Pearson correlation evaluated with double-double accumulation of the
/// raw moment sums and the classical n-scaled formula.
pub fn pearson_dd(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = Dd::from(x.len() as f64);
    let mut sx = Dd::from(0.0);
    let mut sy = Dd::from(0.0);
    let mut sxx = Dd::from(0.0);
    let mut syy = Dd::from(0.0);
    let mut sxy = Dd::from(0.0);
    for (&a, &b) in x.iter().zip(y.iter()) {
        sx = dd_add(sx, Dd::from(a));
        sy = dd_add(sy, Dd::from(b));
        sxx = dd_add(sxx, two_prod(a, a));
        syy = dd_add(syy, two_prod(b, b));
        sxy = dd_add(sxy, two_prod(a, b));
    }
    let num = dd_sub(dd_mul(n, sxy), dd_mul(sx, sy));
    let dx = dd_sub(dd_mul(n, sxx), dd_mul(sx, sx));
    let dy = dd_sub(dd_mul(n, syy), dd_mul(sy, sy));
    dd_div(num, dd_mul(dd_sqrt(dx), dd_sqrt(dy))).value()
}

/// Independent exact kNN: full sort of all pairwise squared distances with
/// (distance, index) ordering. Quadratic and simple on purpose.
pub fn knn_brute_force(values: &Array2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = values.nrows();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut all: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let mut d2 = 0.0;
                for c in 0..values.ncols() {
                    let diff = values[(i, c)] - values[(j, c)];
                    d2 += diff * diff;
                }
                (d2, j)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        out.push(all[..k].iter().map(|&(_, j)| j).collect());
    }
    out
}
