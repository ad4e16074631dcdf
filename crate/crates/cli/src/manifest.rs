//! Run manifests and atomic output writing.
//!
//! Every subcommand writes its outputs through `OutputSet` (temp file +
//! rename) and finishes with a `manifest.json` listing parameters, input
//! hashes, and the hash of every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chronoscope_core::textio::to_json_string;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<OutputEntry>,
    pub duration_ms: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::validation(format!("cannot read `{}`: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Collects outputs for one run: writes each file atomically into the out
/// directory and records its hash for the manifest.
pub struct OutputSet {
    dir: PathBuf,
    entries: Vec<OutputEntry>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            CliError::validation(format!("cannot create `{}`: {e}", dir.display()))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, bytes)
            .map_err(|e| CliError::validation(format!("cannot write `{}`: {e}", tmp.display())))?;
        std::fs::rename(&tmp, &target).map_err(|e| {
            CliError::validation(format!("cannot rename into `{}`: {e}", target.display()))
        })?;
        self.entries.push(OutputEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(target)
    }

    /// Registers a file that was produced in place (already inside the out
    /// directory) after verifying it exists.
    pub fn register(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let hash = hash_file(&path)?;
        self.entries.push(OutputEntry {
            path: name.to_string(),
            sha256: hash,
        });
        Ok(())
    }

    /// Writes `manifest.json` and consumes the set.
    pub fn finish(
        self,
        command: &str,
        parameters: BTreeMap<String, String>,
        input_hashes: BTreeMap<String, String>,
        seed: u64,
        started: Instant,
    ) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            parameters,
            input_hashes,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.entries,
            duration_ms: started.elapsed().as_millis() as u64,
        };
        let json = to_json_string(&manifest).map_err(CliError::from)?;
        let target = self.dir.join("manifest.json");
        let tmp = self.dir.join(".manifest.json.tmp");
        std::fs::write(&tmp, json.as_bytes())
            .map_err(|e| CliError::validation(format!("cannot write manifest: {e}")))?;
        std::fs::rename(&tmp, &target)
            .map_err(|e| CliError::validation(format!("cannot rename manifest: {e}")))?;
        Ok(())
    }
}
