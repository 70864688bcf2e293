//! Persisted ground truth of a generated batch.
//!
//! The manifest is JSON with a fixed key order (struct declaration order
//! below), so identical generation runs produce byte-identical files. Paths
//! are stored relative to the manifest's own directory.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::instantiate::Ranges;
use crate::metrics::Metrics;
use crate::model::BugKind;

/// Current major format version; readers refuse anything newer.
pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub format_version: u64,
    pub generator_version: String,
    pub batch: String,
    pub master_seed: u64,
    pub rng_algorithm: String,
    pub ranges: Ranges,
    pub records: Vec<Record>,
}

/// One generated PUT. Ground-truth fields are `null` when `status` is an
/// error; `nonTrigger` is also `null` for PUTs whose bug is reached on every
/// input of the right arity, where no clean input exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Record {
    pub index: usize,
    pub child_seed: u64,
    pub spec_text: String,
    pub argv_arity: u32,
    pub trigger: Option<Vec<String>>,
    pub non_trigger: Option<Vec<String>>,
    pub bug_kind: Option<BugKind>,
    pub bug_line: Option<u32>,
    pub source_path: Option<String>,
    pub source_sha256: Option<String>,
    pub metrics: Option<Metrics>,
    pub status: RecordStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Ok,
    Error(String),
}

impl Record {
    pub fn is_ok(&self) -> bool {
        matches!(self.status, RecordStatus::Ok)
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("manifest {path} has format version {found}, this build reads up to {}", FORMAT_VERSION)]
    Version { path: String, found: u64 },
}

fn io_err(path: &Path, source: std::io::Error) -> ManifestError {
    ManifestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serializes the manifest to `path` as pretty-printed JSON with a trailing
/// newline.
pub fn write(manifest: &Manifest, path: &Path) -> Result<(), ManifestError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Reads a manifest back, refusing files written by a newer format.
pub fn read(path: &Path) -> Result<Manifest, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ManifestError::Json {
            path: path.display().to_string(),
            source: e,
        })?;
    let found = value
        .get("formatVersion")
        .and_then(|v| v.as_u64())
        .unwrap_or(0);
    if found > FORMAT_VERSION {
        return Err(ManifestError::Version {
            path: path.display().to_string(),
            found,
        });
    }
    serde_json::from_value(value).map_err(|e| ManifestError::Json {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Checks that every ok record's source file exists under `dir` and still
/// hashes to the recorded digest. Returns one message per problem.
pub fn check_integrity(manifest: &Manifest, dir: &Path) -> Vec<String> {
    let mut problems = Vec::new();
    for record in &manifest.records {
        if !record.is_ok() {
            continue;
        }
        let (Some(rel), Some(expected)) = (&record.source_path, &record.source_sha256) else {
            problems.push(format!("record {}: missing source path or hash", record.index));
            continue;
        };
        let path = dir.join(rel);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let actual = sha256_hex(&bytes);
                if &actual != expected {
                    problems.push(format!(
                        "record {}: {} hash mismatch (expected {expected}, found {actual})",
                        record.index,
                        path.display()
                    ));
                }
            }
            Err(e) => problems.push(format!(
                "record {}: cannot read {}: {e}",
                record.index,
                path.display()
            )),
        }
    }
    problems
}
