//! Shared embedding type: n×m coordinates with provenance, CSV
//! serialization, and the year-orientation sign convention used by every
//! embedding producer.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{hex_digest, PaintingMeta};
use crate::error::{Error, Result};
use crate::textio::fmt_f64;

/// Where an embedding came from: method name, parameters, optional seed,
/// source-data hash, and any column sign flips applied after fitting.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub source_hash: String,
    pub sign_flips: Vec<bool>,
}

/// n×m coordinates row-aligned with `ids`.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub ids: Vec<String>,
    pub coords: Array2<f64>,
    pub provenance: Provenance,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn m(&self) -> usize {
        self.coords.ncols()
    }

    /// Stable content hash over ids and coordinates.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        hasher.update((self.m() as u64).to_le_bytes());
        for id in &self.ids {
            hasher.update(id.as_bytes());
            hasher.update([0u8]);
        }
        for v in self.coords.iter() {
            hasher.update(v.to_le_bytes());
        }
        hex_digest(hasher)
    }

    /// Flips each column so its correlation with year is non-negative when
    /// years are available; otherwise fixes the largest-magnitude entry
    /// positive. Returns the per-column flip flags (also recorded in
    /// provenance).
    pub fn orient_columns(&mut self, meta: Option<&[PaintingMeta]>) -> Vec<bool> {
        let years: Option<BTreeMap<&str, f64>> = meta.map(|ms| {
            ms.iter()
                .filter_map(|m| m.year.map(|y| (m.id.as_str(), y as f64)))
                .collect()
        });
        let mut flips = vec![false; self.m()];
        for j in 0..self.m() {
            let flip = match &years {
                Some(by_id) if by_id.len() >= 3 => {
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for (i, id) in self.ids.iter().enumerate() {
                        if let Some(&y) = by_id.get(id.as_str()) {
                            xs.push(self.coords[(i, j)]);
                            ys.push(y);
                        }
                    }
                    match crate::correlate::pearson(&xs, &ys) {
                        Ok(p) => p < 0.0,
                        Err(_) => largest_entry_negative(self.coords.column(j)),
                    }
                }
                _ => largest_entry_negative(self.coords.column(j)),
            };
            if flip {
                for i in 0..self.n() {
                    self.coords[(i, j)] = -self.coords[(i, j)];
                }
                flips[j] = true;
            }
        }
        self.provenance.sign_flips = flips.clone();
        flips
    }

    /// Writes `id,coord_1..coord_m` CSV with 17-significant-digit floats
    /// and `\n` line endings.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        let mut header = String::from("id");
        for j in 0..self.m() {
            header.push_str(&format!(",coord_{}", j + 1));
        }
        header.push('\n');
        out.write_all(header.as_bytes())?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut line = id.clone();
            for j in 0..self.m() {
                line.push(',');
                line.push_str(&fmt_f64(self.coords[(i, j)]));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Reads an embedding CSV written by `write_csv`.
    pub fn read_csv(path: &Path) -> Result<Embedding> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| {
            Error::DimensionMismatch("embedding CSV is empty".into())
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.is_empty() || cols[0] != "id" {
            return Err(Error::DimensionMismatch(
                "embedding CSV header must start with `id`".into(),
            ));
        }
        let m = cols.len() - 1;
        for (j, c) in cols.iter().skip(1).enumerate() {
            if *c != format!("coord_{}", j + 1) {
                return Err(Error::DimensionMismatch(format!(
                    "unexpected embedding column `{c}`"
                )));
            }
        }
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != m + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "embedding row has {} fields, expected {}",
                    fields.len(),
                    m + 1
                )));
            }
            ids.push(fields[0].to_string());
            for f in &fields[1..] {
                let v: f64 = f.parse().map_err(|_| {
                    Error::DimensionMismatch(format!("bad float `{f}` in embedding CSV"))
                })?;
                data.push(v);
            }
        }
        let n = ids.len();
        let coords = Array2::from_shape_vec((n, m), data)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let provenance = Provenance {
            method: "file".into(),
            params: BTreeMap::new(),
            seed: None,
            source_hash: hex_digest(hasher),
            sign_flips: Vec::new(),
        };
        Ok(Embedding {
            ids,
            coords,
            provenance,
        })
    }
}

fn largest_entry_negative(col: ndarray::ArrayView1<f64>) -> bool {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &v) in col.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    col[best] < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> Embedding {
        Embedding {
            ids: vec!["a".into(), "b".into(), "c".into()],
            coords: array![[0.25, -1.5], [1.0, 2.5], [-0.125, 0.75]],
            provenance: Provenance::default(),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        let emb = sample();
        emb.write_csv(&path).unwrap();
        let back = Embedding::read_csv(&path).unwrap();
        assert_eq!(emb.ids, back.ids);
        for (x, y) in emb.coords.iter().zip(back.coords.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn orientation_fixes_largest_entry_positive_without_years() {
        let mut emb = sample();
        let flips = emb.orient_columns(None);
        // Column 0: largest |entry| is 1.0 (positive) -> no flip.
        // Column 1: largest |entry| is 2.5 (positive) -> no flip.
        assert_eq!(flips, vec![false, false]);
        emb.coords[(1, 0)] = -3.0;
        let flips = emb.orient_columns(None);
        assert_eq!(flips, vec![true, false]);
        assert_eq!(emb.coords[(1, 0)], 3.0);
    }

    #[test]
    fn orientation_aligns_with_year() {
        let meta: Vec<PaintingMeta> = [("a", 1900), ("b", 1500), ("c", 1700)]
            .iter()
            .map(|(id, y)| PaintingMeta {
                id: id.to_string(),
                artist: "x".into(),
                style: "s".into(),
                year: Some(*y),
                wolfflin: [None; 5],
            })
            .collect();
        let mut emb = Embedding {
            ids: vec!["a".into(), "b".into(), "c".into()],
            coords: array![[-3.0, 3.0], [-1.0, 1.0], [-2.0, 2.0]],
            provenance: Provenance::default(),
        };
        // Rows are (a: 1900), (b: 1500), (c: 1700): column 0 decreases
        // with year and gets flipped; column 1 already increases.
        let flips = emb.orient_columns(Some(&meta));
        assert_eq!(flips, vec![true, false]);
        assert_eq!(emb.coords[(0, 0)], 3.0);
        assert_eq!(emb.coords[(0, 1)], 3.0);
    }
}
