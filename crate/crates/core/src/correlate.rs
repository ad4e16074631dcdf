//! Pearson correlation of embedding dimensions with creation time and
//! concept ratings, polar-coordinate chronology, and the convex-weight
//! combination of two embedding axes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::dataset::{PaintingMeta, WOLFFLIN_CONCEPTS};
use crate::embedding::{Embedding, Provenance};
use crate::error::{Error, Result};
use crate::textio::fmt_f64;

/// Product-moment correlation coefficient of two equal-length series.
///
/// Requires at least three samples and non-constant inputs; the caller is
/// responsible for dropping pairs with missing values first.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "pearson series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantSeries);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.clamp(-1.0, 1.0))
}

/// Pearson over optional pairs, dropping rows where either side is
/// missing. Returns the coefficient and the sample count used.
pub fn pearson_pairs<I>(pairs: I) -> (Result<f64>, usize)
where
    I: IntoIterator<Item = (Option<f64>, Option<f64>)>,
{
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (x, y) in pairs {
        if let (Some(x), Some(y)) = (x, y) {
            xs.push(x);
            ys.push(y);
        }
    }
    let n = xs.len();
    (pearson(&xs, &ys), n)
}

/// PCC table of embedding dimensions against year and the five concept
/// ratings. Undefined cells (constant series or too few samples) are
/// `None`; counts record how many rows carried the attribute.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub attributes: Vec<String>,
    pub dimensions: usize,
    /// `table[dim][attr]`, signed.
    pub table: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
    pub provenance: Provenance,
}

impl CorrelationReport {
    pub fn cell(&self, dim: usize, attribute: &str) -> Option<f64> {
        let a = self.attributes.iter().position(|x| x == attribute)?;
        self.table[dim][a]
    }

    /// CSV with one row per dimension: signed PCCs, then absolute values
    /// for the concept columns. Undefined cells stay blank.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("dimension");
        for a in &self.attributes {
            out.push(',');
            out.push_str(a);
        }
        for a in self.attributes.iter().skip(1) {
            out.push_str(",abs_");
            out.push_str(a);
        }
        out.push('\n');
        for dim in 0..self.dimensions {
            out.push_str(&format!("dim_{}", dim + 1));
            for a in 0..self.attributes.len() {
                out.push(',');
                if let Some(v) = self.table[dim][a] {
                    out.push_str(&fmt_f64(v));
                }
            }
            for a in 1..self.attributes.len() {
                out.push(',');
                if let Some(v) = self.table[dim][a] {
                    out.push_str(&fmt_f64(v.abs()));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn meta_index<'m>(meta: &'m [PaintingMeta]) -> BTreeMap<&'m str, &'m PaintingMeta> {
    meta.iter().map(|m| (m.id.as_str(), m)).collect()
}

/// Correlates every embedding dimension with year and each concept rating
/// over the rows where the attribute is present (pairwise deletion).
pub fn correlation_report(emb: &Embedding, meta: &[PaintingMeta]) -> Result<CorrelationReport> {
    let index = meta_index(meta);
    let mut attributes = vec!["year".to_string()];
    for c in WOLFFLIN_CONCEPTS {
        attributes.push(format!("w_{c}"));
    }
    let mut table = Vec::with_capacity(emb.m());
    let mut counts = Vec::with_capacity(emb.m());
    for dim in 0..emb.m() {
        let mut row = Vec::with_capacity(attributes.len());
        let mut row_counts = Vec::with_capacity(attributes.len());
        for attr in 0..attributes.len() {
            let pairs = emb.ids.iter().enumerate().map(|(i, id)| {
                let value = index.get(id.as_str()).and_then(|m| {
                    if attr == 0 {
                        m.year.map(|y| y as f64)
                    } else {
                        m.wolfflin[attr - 1]
                    }
                });
                (Some(emb.coords[(i, dim)]), value)
            });
            let (pcc, n) = pearson_pairs(pairs);
            row.push(match pcc {
                Ok(v) => Some(v),
                Err(Error::ConstantSeries) | Err(Error::TooFewSamples { .. }) => None,
                Err(e) => return Err(e),
            });
            row_counts.push(n);
        }
        table.push(row);
        counts.push(row_counts);
    }
    let mut provenance = emb.provenance.clone();
    provenance
        .params
        .insert("embedding_hash".into(), emb.content_hash());
    Ok(CorrelationReport {
        attributes,
        dimensions: emb.m(),
        table,
        counts,
        provenance,
    })
}

/// Polar coordinates of a 2-D embedding about its coordinate-wise mean.
/// Angles are counter-clockwise from the positive first axis, in [0, 2pi).
#[derive(Debug, Clone, Serialize)]
pub struct PolarCoords {
    pub ids: Vec<String>,
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub center: [f64; 2],
}

pub fn polar(emb: &Embedding) -> Result<PolarCoords> {
    if emb.m() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "polar coordinates need a 2-D embedding, got m={}",
            emb.m()
        )));
    }
    let n = emb.n();
    let cx = emb.coords.column(0).sum() / n as f64;
    let cy = emb.coords.column(1).sum() / n as f64;
    let mut r = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut all_zero = true;
    for i in 0..n {
        let dx = emb.coords[(i, 0)] - cx;
        let dy = emb.coords[(i, 1)] - cy;
        let radius = (dx * dx + dy * dy).sqrt();
        if radius > 0.0 {
            all_zero = false;
        }
        let mut t = dy.atan2(dx);
        if t < 0.0 {
            t += 2.0 * PI;
        }
        // atan2 can return exactly 2*pi after the wrap when dy is a tiny
        // negative; keep the contract half-open.
        if t >= 2.0 * PI {
            t = 0.0;
        }
        r.push(radius);
        theta.push(t);
    }
    if all_zero {
        return Err(Error::DegenerateEmbedding);
    }
    Ok(PolarCoords {
        ids: emb.ids.clone(),
        r,
        theta,
        center: [cx, cy],
    })
}

/// Best angular-chronology correlation over branch-cut offsets scanned at
/// one-degree steps.
#[derive(Debug, Clone, Serialize)]
pub struct AngularCorrelation {
    /// Signed PCC at the best cut.
    pub pcc: f64,
    /// Branch-cut offset in radians, in [0, 2pi).
    pub cut: f64,
    pub samples: usize,
}

pub fn angular_time_correlation(
    polar: &PolarCoords,
    meta: &[PaintingMeta],
) -> Result<AngularCorrelation> {
    let index = meta_index(meta);
    let mut thetas = Vec::new();
    let mut years = Vec::new();
    for (i, id) in polar.ids.iter().enumerate() {
        if let Some(y) = index.get(id.as_str()).and_then(|m| m.year) {
            thetas.push(polar.theta[i]);
            years.push(y as f64);
        }
    }
    if thetas.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: thetas.len(),
        });
    }
    let mut best: Option<AngularCorrelation> = None;
    let mut last_err = Error::ConstantSeries;
    let mut adjusted = vec![0.0; thetas.len()];
    for deg in 0..360usize {
        let cut = deg as f64 * PI / 180.0;
        for (a, &t) in adjusted.iter_mut().zip(thetas.iter()) {
            let mut v = t - cut;
            if v < 0.0 {
                v += 2.0 * PI;
            }
            *a = v;
        }
        match pearson(&adjusted, &years) {
            Ok(p) => {
                let better = match &best {
                    Some(b) => p.abs() > b.pcc.abs(),
                    None => true,
                };
                if better {
                    best = Some(AngularCorrelation {
                        pcc: p,
                        cut,
                        samples: thetas.len(),
                    });
                }
            }
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

/// A single axis combined from two embedding dimensions with convex
/// weights proportional to their absolute year correlations.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexAxis {
    pub dims: [usize; 2],
    pub weights: [f64; 2],
    pub dim_pccs: [f64; 2],
    /// Year correlation of the combined axis.
    pub pcc: f64,
    #[serde(skip)]
    pub axis: Vec<f64>,
}

pub fn convex_combination(
    emb: &Embedding,
    dims: (usize, usize),
    meta: &[PaintingMeta],
) -> Result<ConvexAxis> {
    let (a, b) = dims;
    if a >= emb.m() || b >= emb.m() || a == b {
        return Err(Error::DimensionMismatch(format!(
            "convex combination needs two distinct dimensions < {}, got ({a}, {b})",
            emb.m()
        )));
    }
    let index = meta_index(meta);
    let mut xa = Vec::new();
    let mut xb = Vec::new();
    let mut years = Vec::new();
    for (i, id) in emb.ids.iter().enumerate() {
        if let Some(y) = index.get(id.as_str()).and_then(|m| m.year) {
            xa.push(emb.coords[(i, a)]);
            xb.push(emb.coords[(i, b)]);
            years.push(y as f64);
        }
    }
    let pcc_a = pearson(&xa, &years)?;
    let pcc_b = pearson(&xb, &years)?;
    let total = pcc_a.abs() + pcc_b.abs();
    if total == 0.0 {
        return Err(Error::ConstantSeries);
    }
    let weights = [pcc_a.abs() / total, pcc_b.abs() / total];
    let signs = [pcc_a.signum(), pcc_b.signum()];
    let axis: Vec<f64> = (0..emb.n())
        .map(|i| {
            weights[0] * signs[0] * emb.coords[(i, a)] + weights[1] * signs[1] * emb.coords[(i, b)]
        })
        .collect();
    let axis_with_year: Vec<f64> = emb
        .ids
        .iter()
        .enumerate()
        .filter(|(_, id)| index.get(id.as_str()).and_then(|m| m.year).is_some())
        .map(|(i, _)| axis[i])
        .collect();
    let pcc = pearson(&axis_with_year, &years)?;
    Ok(ConvexAxis {
        dims: [a, b],
        weights,
        dim_pccs: [pcc_a, pcc_b],
        pcc,
        axis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Provenance;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn perfect_positive_and_negative() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn constant_and_short_series_rejected() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantSeries)
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn polar_unit_points() {
        let emb = Embedding {
            ids: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            coords: array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
            provenance: Provenance::default(),
        };
        let p = polar(&emb).unwrap();
        assert_eq!(p.center, [0.0, 0.0]);
        let expect = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        for i in 0..4 {
            assert_abs_diff_eq!(p.theta[i], expect[i], epsilon = 1e-15);
            assert_abs_diff_eq!(p.r[i], 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn polar_translation_invariant() {
        let base = array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        let ids: Vec<String> = (0..4).map(|i| format!("p{i}")).collect();
        let emb1 = Embedding {
            ids: ids.clone(),
            coords: base.clone(),
            provenance: Provenance::default(),
        };
        let emb2 = Embedding {
            ids,
            coords: base + 7.25,
            provenance: Provenance::default(),
        };
        let p1 = polar(&emb1).unwrap();
        let p2 = polar(&emb2).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(p1.theta[i], p2.theta[i], epsilon = 1e-12);
            assert_abs_diff_eq!(p1.r[i], p2.r[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_embedding_rejected() {
        let emb = Embedding {
            ids: vec!["a".into(), "b".into()],
            coords: array![[2.0, 3.0], [2.0, 3.0]],
            provenance: Provenance::default(),
        };
        assert!(matches!(polar(&emb), Err(Error::DegenerateEmbedding)));
    }

    #[test]
    fn convex_weights_from_reference_pccs() {
        let total: f64 = 0.4554 + 0.5545;
        let w0 = 0.4554 / total;
        let w1 = 0.5545 / total;
        assert!((w0 - 0.4510).abs() < 1e-4);
        assert!((w1 - 0.5490).abs() < 1e-4);
    }

    #[test]
    fn convex_combination_degenerate_weight() {
        // Dim 0 tracks year exactly; dim 1 repeats [1,-1,-1,1], which is
        // exactly orthogonal to any linear ramp, so its year PCC is 0.
        let n = 24;
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let meta: Vec<PaintingMeta> = (0..n)
            .map(|i| PaintingMeta {
                id: format!("p{i}"),
                artist: "x".into(),
                style: "s".into(),
                year: Some(1500 + (i as i32) * 10),
                wolfflin: [None; 5],
            })
            .collect();
        let pattern = [1.0, -1.0, -1.0, 1.0];
        let mut coords = ndarray::Array2::zeros((n, 2));
        for i in 0..n {
            coords[(i, 0)] = i as f64;
            coords[(i, 1)] = pattern[i % 4];
        }
        let emb = Embedding {
            ids,
            coords,
            provenance: Provenance::default(),
        };
        let res = convex_combination(&emb, (0, 1), &meta).unwrap();
        assert_eq!(res.weights, [1.0, 0.0]);
        for (axis, orig) in res.axis.iter().zip(emb.coords.column(0).iter()) {
            assert_abs_diff_eq!(axis, orig, epsilon = 1e-15);
        }
        assert!(res.pcc > 0.999_999);
    }
}
