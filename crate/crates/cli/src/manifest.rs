//! Run manifests: what was run, with which inputs, and the checksum of every
//! file it wrote.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::table::SCHEMA_VERSION;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// File name, relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub schema: String,
    pub schema_version: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    /// Arguments after the program name, with config values merged in and
    /// `--out-dir`, `--workers` and `--config` removed.
    pub argv: Vec<String>,
    /// Fully resolved parameters.
    pub params: serde_json::Value,
    pub seed: u64,
    pub instance_sha256: Option<String>,
    pub outputs: Vec<OutputEntry>,
    pub status: RunStatus,
    pub failures: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: Vec<String>, params: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            manifest_version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            argv,
            params,
            seed,
            instance_sha256: None,
            outputs: Vec::new(),
            status: RunStatus::Complete,
            failures: Vec::new(),
        }
    }

    pub fn record_output(&mut self, name: &str, bytes: &[u8], schema: &str) {
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            schema: schema.to_string(),
            schema_version: SCHEMA_VERSION,
        });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: not a run manifest: {e}", path.display())))?;
        if m.manifest_version != MANIFEST_VERSION {
            return Err(CliError::Invalid(format!(
                "{}: manifest version {} not supported (expected {MANIFEST_VERSION})",
                path.display(),
                m.manifest_version
            )));
        }
        Ok(m)
    }
}
