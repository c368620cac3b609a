//! Run manifests: every run records its materialized configuration, seed,
//! and the SHA-256 of every data file it wrote. Re-running with the same
//! manifest reproduces the data files byte for byte (the manifest itself
//! carries wall-clock time and is excluded from that claim).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub master_seed: u64,
    pub config: RunConfig,
    pub outputs: Vec<OutputRecord>,
    pub trial_counts: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            master_seed: config.seed,
            config: config.clone(),
            outputs: Vec::new(),
            trial_counts: BTreeMap::new(),
            warnings: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    /// Writes `rel_path` under `out_dir` and records its hash.
    pub fn write_output(
        &mut self,
        out_dir: &Path,
        rel_path: &str,
        bytes: &[u8],
    ) -> Result<(), CliError> {
        let full = out_dir.join(rel_path);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&full, bytes).map_err(|e| CliError::io(&full, e))?;
        self.outputs.push(OutputRecord {
            path: rel_path.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes the manifest itself (not hashed into `outputs`).
    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let full = out_dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Validation(format!("manifest serialization: {e}")))?;
        std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        std::fs::write(&full, json.as_bytes()).map_err(|e| CliError::io(&full, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
