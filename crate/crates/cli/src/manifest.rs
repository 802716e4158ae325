//! Run manifests: every command writes one before doing real work and
//! rewrites it on success, so an interrupted run leaves `completed: false`
//! behind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub code_version: String,
    /// The effective configuration after global-flag overrides.
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_checksum: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub completed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: RunConfig) -> Self {
        Manifest {
            schema_version: crate::config::SCHEMA_VERSION,
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            dataset_checksum: None,
            notes: Vec::new(),
            completed: false,
            outputs: Vec::new(),
        }
    }
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.json")
}

pub fn write_manifest(out_dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Runtime(format!("manifest serialization failed: {e}")))?;
    std::fs::write(manifest_path(out_dir), text + "\n")?;
    Ok(())
}
