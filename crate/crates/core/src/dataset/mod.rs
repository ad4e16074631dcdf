//! Data model and ingestion: painting metadata, activation matrices, the
//! style-merge map, and synthetic datasets with planted structure.
//!
//! On-disk interchange is a metadata CSV plus a raw little-endian f32
//! payload described by a JSON sidecar (`<payload>.json`) and an ids file.
//! All analysis happens in f64.

mod merge;
mod synth;

pub use merge::{StyleMergeMap, CANONICAL_STYLES};
pub use synth::{generate_synthetic, GroundTruth, SyntheticSpec};

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::textio::fmt_f64;

/// Names of the five concept pairs, in metadata column order.
pub const WOLFFLIN_CONCEPTS: [&str; 5] = [
    "linear_painterly",
    "planar_recession",
    "closed_open",
    "multiplicity_unity",
    "absolute_relative",
];

/// CSV header for metadata files, fixed and ordered.
pub const META_HEADER: [&str; 9] = [
    "id",
    "artist",
    "style",
    "year",
    "w_linear_painterly",
    "w_planar_recession",
    "w_closed_open",
    "w_multiplicity_unity",
    "w_absolute_relative",
];

/// Per-painting metadata. Missing year or concept ratings are retained as
/// `None` and excluded from the affected analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintingMeta {
    pub id: String,
    pub artist: String,
    pub style: String,
    pub year: Option<i32>,
    pub wolfflin: [Option<f64>; 5],
}

impl PaintingMeta {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidMeta {
                id: String::from("(empty)"),
                reason: "id must be non-empty".into(),
            });
        }
        if let Some(y) = self.year {
            if !(1000..=2100).contains(&y) {
                return Err(Error::InvalidMeta {
                    id: self.id.clone(),
                    reason: format!("year {y} outside [1000, 2100]"),
                });
            }
        }
        for (k, rating) in self.wolfflin.iter().enumerate() {
            if let Some(r) = rating {
                if !r.is_finite() || !(1.0..=5.0).contains(r) {
                    return Err(Error::InvalidMeta {
                        id: self.id.clone(),
                        reason: format!("{} rating {r} outside [1, 5]", WOLFFLIN_CONCEPTS[k]),
                    });
                }
            }
        }
        Ok(())
    }
}

/// An n×d matrix of pre-nonlinearity activations, row-aligned with `ids`.
#[derive(Debug, Clone)]
pub struct ActivationSet {
    pub values: Array2<f64>,
    pub ids: Vec<String>,
    pub layer_tag: String,
    pub model_tag: String,
}

impl ActivationSet {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = self.values.dim();
        if n < 2 || d < 2 {
            return Err(Error::DimensionMismatch(format!(
                "activation set needs n >= 2 and d >= 2, got {n}x{d}"
            )));
        }
        if self.ids.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} ids for {n} rows",
                self.ids.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for id in &self.ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (i, row) in self.values.rows().into_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue {
                        id: self.ids[i].clone(),
                        column: j,
                    });
                }
            }
        }
        Ok(())
    }

    /// Stable content hash over shape, ids, tags, and the f64 values.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        hasher.update((self.d() as u64).to_le_bytes());
        for id in &self.ids {
            hasher.update(id.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update(self.layer_tag.as_bytes());
        hasher.update([0u8]);
        hasher.update(self.model_tag.as_bytes());
        hasher.update([0u8]);
        for v in self.values.iter() {
            hasher.update(v.to_le_bytes());
        }
        hex_digest(hasher)
    }
}

pub(crate) fn hex_digest(hasher: Sha256) -> String {
    let bytes = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// JSON sidecar describing an activation payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActivationSidecar {
    pub n: usize,
    pub d: usize,
    pub dtype: String,
    pub order: String,
    pub ids_file: String,
    pub layer_tag: String,
    pub model_tag: String,
}

fn sidecar_path(payload: &Path) -> PathBuf {
    let mut os = payload.as_os_str().to_os_string();
    os.push(".json");
    PathBuf::from(os)
}

/// Reads metadata rows from a CSV file with the fixed column set. Empty
/// cells are missing values; years must be plain integers.
pub fn load_meta(path: &Path) -> Result<Vec<PaintingMeta>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    {
        let header = reader.headers()?;
        let got: Vec<&str> = header.iter().collect();
        if got != META_HEADER {
            return Err(Error::DimensionMismatch(format!(
                "metadata header must be exactly `{}`, got `{}`",
                META_HEADER.join(","),
                got.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != META_HEADER.len() {
            return Err(Error::DimensionMismatch(format!(
                "metadata row has {} fields, expected {}",
                record.len(),
                META_HEADER.len()
            )));
        }
        let id = record[0].to_string();
        let year = match record[3].trim() {
            "" => None,
            text => Some(text.parse::<i32>().map_err(|_| Error::InvalidMeta {
                id: id.clone(),
                reason: format!("year `{text}` is not a plain integer"),
            })?),
        };
        let mut wolfflin = [None; 5];
        for k in 0..5 {
            let cell = record[4 + k].trim();
            if !cell.is_empty() {
                wolfflin[k] = Some(cell.parse::<f64>().map_err(|_| Error::InvalidMeta {
                    id: id.clone(),
                    reason: format!("rating `{cell}` is not a number"),
                })?);
            }
        }
        let meta = PaintingMeta {
            id: id.clone(),
            artist: record[1].to_string(),
            style: record[2].to_string(),
            year,
            wolfflin,
        };
        meta.validate()?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        rows.push(meta);
    }
    Ok(rows)
}

/// Writes metadata to CSV with the fixed header. Ratings are written with
/// 17 significant digits so the file round-trips bit-exactly.
pub fn write_meta(meta: &[PaintingMeta], path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    writer.write_record(META_HEADER)?;
    for m in meta {
        let year = m.year.map(|y| y.to_string()).unwrap_or_default();
        let ratings: Vec<String> = m
            .wolfflin
            .iter()
            .map(|r| r.map(fmt_f64).unwrap_or_default())
            .collect();
        let mut record = vec![m.id.clone(), m.artist.clone(), m.style.clone(), year];
        record.extend(ratings);
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads an activation payload via its JSON sidecar (`<payload>.json`).
pub fn load_activations(payload: &Path) -> Result<ActivationSet> {
    let sidecar_file = sidecar_path(payload);
    let sidecar: ActivationSidecar =
        serde_json::from_str(&std::fs::read_to_string(&sidecar_file)?)?;
    if sidecar.dtype != "f32le" {
        return Err(Error::DimensionMismatch(format!(
            "unsupported dtype `{}` (expected f32le)",
            sidecar.dtype
        )));
    }
    if sidecar.order != "row-major" {
        return Err(Error::DimensionMismatch(format!(
            "unsupported order `{}` (expected row-major)",
            sidecar.order
        )));
    }
    let mut bytes = Vec::new();
    std::fs::File::open(payload)?.read_to_end(&mut bytes)?;
    let expect = sidecar.n * sidecar.d * 4;
    if bytes.len() != expect {
        return Err(Error::DimensionMismatch(format!(
            "payload holds {} bytes, sidecar declares {}x{} f32 ({expect} bytes)",
            bytes.len(),
            sidecar.n,
            sidecar.d
        )));
    }
    let ids_path = payload
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&sidecar.ids_file);
    let ids: Vec<String> = std::fs::read_to_string(&ids_path)?
        .lines()
        .map(|l| l.to_string())
        .collect();
    if ids.len() != sidecar.n {
        return Err(Error::DimensionMismatch(format!(
            "ids file has {} lines, sidecar declares n={}",
            ids.len(),
            sidecar.n
        )));
    }
    let mut values = Array2::zeros((sidecar.n, sidecar.d));
    for i in 0..sidecar.n {
        for j in 0..sidecar.d {
            let off = (i * sidecar.d + j) * 4;
            let v = f32::from_le_bytes([
                bytes[off],
                bytes[off + 1],
                bytes[off + 2],
                bytes[off + 3],
            ]);
            values[(i, j)] = v as f64;
        }
    }
    let set = ActivationSet {
        values,
        ids,
        layer_tag: sidecar.layer_tag,
        model_tag: sidecar.model_tag,
    };
    set.validate()?;
    Ok(set)
}

/// Writes an activation payload, its sidecar, and its ids file. Values are
/// stored as little-endian f32, bit-exact.
pub fn write_activations(set: &ActivationSet, payload: &Path) -> Result<()> {
    set.validate()?;
    let stem = payload
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("activations");
    let ids_name = format!("{}.ids", stem.trim_end_matches(".bin"));
    let ids_path = payload
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&ids_name);

    let mut bytes = Vec::with_capacity(set.n() * set.d() * 4);
    for v in set.values.iter() {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    std::fs::File::create(payload)?.write_all(&bytes)?;

    let sidecar = ActivationSidecar {
        n: set.n(),
        d: set.d(),
        dtype: "f32le".into(),
        order: "row-major".into(),
        ids_file: ids_name,
        layer_tag: set.layer_tag.clone(),
        model_tag: set.model_tag.clone(),
    };
    std::fs::write(
        sidecar_path(payload),
        crate::textio::to_json_string(&sidecar)?,
    )?;
    let mut ids_text = String::new();
    for id in &set.ids {
        ids_text.push_str(id);
        ids_text.push('\n');
    }
    std::fs::write(&ids_path, ids_text)?;
    Ok(())
}

/// Loads and joins a metadata CSV with an activation payload, applying the
/// merge map to style labels. Metadata ids and activation ids must be the
/// same set.
pub fn load_dataset(
    meta_file: &Path,
    activation_file: &Path,
    merge_map: Option<&StyleMergeMap>,
) -> Result<(Vec<PaintingMeta>, ActivationSet)> {
    let mut meta = load_meta(meta_file)?;
    let acts = load_activations(activation_file)?;
    if meta.len() != acts.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} metadata rows vs {} activation rows",
            meta.len(),
            acts.n()
        )));
    }
    let meta_ids: BTreeSet<&str> = meta.iter().map(|m| m.id.as_str()).collect();
    let act_ids: BTreeSet<&str> = acts.ids.iter().map(|s| s.as_str()).collect();
    if meta_ids != act_ids {
        let missing = meta_ids
            .difference(&act_ids)
            .chain(act_ids.difference(&meta_ids))
            .next()
            .unwrap_or(&"?");
        return Err(Error::DimensionMismatch(format!(
            "metadata and activation ids are not bijective (e.g. `{missing}`)"
        )));
    }
    if let Some(map) = merge_map {
        for m in meta.iter_mut() {
            m.style = map.apply(&m.style)?;
        }
    }
    Ok((meta, acts))
}

/// Writes a full dataset into a directory using the conventional names
/// `meta.csv`, `ds.bin`, `ds.bin.json`, `ds.ids`.
pub fn write_dataset(meta: &[PaintingMeta], acts: &ActivationSet, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_meta(meta, &dir.join("meta.csv"))?;
    write_activations(acts, &dir.join("ds.bin"))?;
    Ok(())
}

/// Joins metadata rows to activation rows by id; element `i` of the result
/// is the metadata for activation row `i`.
pub fn join_by_id<'m>(meta: &'m [PaintingMeta], acts: &ActivationSet) -> Result<Vec<&'m PaintingMeta>> {
    let index: std::collections::BTreeMap<&str, &PaintingMeta> =
        meta.iter().map(|m| (m.id.as_str(), m)).collect();
    acts.ids
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::DimensionMismatch(format!("no metadata for id `{id}`")))
        })
        .collect()
}
