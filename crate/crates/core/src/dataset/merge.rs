//! Style-label canonicalization.
//!
//! Raw collection labels are noisy and finer-grained than the 20 canonical
//! classes the models were trained on, so ingestion funnels every label
//! through a merge map. Unknown labels pass through unchanged unless the
//! map is built in strict mode.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// The 20 canonical style classes, in the fixed reporting/palette order.
pub const CANONICAL_STYLES: [&str; 20] = [
    "Early Renaissance",
    "High Renaissance",
    "Mannerism and Late Renaissance",
    "Northern Renaissance",
    "Baroque",
    "Rococo",
    "Romanticism",
    "Impressionism",
    "Post-Impressionism",
    "Realism",
    "Art Nouveau",
    "Cubism",
    "Expressionism",
    "Fauvism",
    "Abstract-Expressionism",
    "Color field painting",
    "Minimalism",
    "Naïve art-Primitivism",
    "Ukiyo-e",
    "Pop-art",
];

const DEFAULT_MAP_JSON: &str = include_str!("../../assets/default_merge_map.json");

/// Maps raw style labels to canonical ones.
#[derive(Debug, Clone)]
pub struct StyleMergeMap {
    mapping: BTreeMap<String, String>,
    strict: bool,
}

impl StyleMergeMap {
    /// Builds a map from raw -> canonical pairs. Canonical labels are
    /// completed to map to themselves so application is idempotent.
    pub fn new(pairs: BTreeMap<String, String>, strict: bool) -> Result<Self> {
        let mut mapping = pairs;
        for (raw, canonical) in mapping.clone() {
            if raw.is_empty() || canonical.is_empty() {
                return Err(Error::InvalidMeta {
                    id: raw,
                    reason: "merge map labels must be non-empty".into(),
                });
            }
            mapping.entry(canonical.clone()).or_insert(canonical);
        }
        Ok(Self { mapping, strict })
    }

    /// The default 20-class table.
    pub fn default_table(strict: bool) -> Self {
        let pairs: BTreeMap<String, String> =
            serde_json::from_str(DEFAULT_MAP_JSON).expect("bundled merge map is valid JSON");
        Self::new(pairs, strict).expect("bundled merge map is valid")
    }

    /// Loads a raw -> canonical JSON object from disk.
    pub fn from_json_file(path: &Path, strict: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let pairs: BTreeMap<String, String> = serde_json::from_str(&text)?;
        Self::new(pairs, strict)
    }

    /// Canonicalizes one label. Unknown labels pass through unchanged, or
    /// error when the map is strict.
    pub fn apply(&self, raw: &str) -> Result<String> {
        match self.mapping.get(raw) {
            Some(canonical) => Ok(canonical.clone()),
            None if self.strict => Err(Error::UnknownStyleLabel(raw.to_string())),
            None => Ok(raw.to_string()),
        }
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn mapping(&self) -> &BTreeMap<String, String> {
        &self.mapping
    }
}
