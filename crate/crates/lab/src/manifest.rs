//! Run manifest: written before the first experiment starts and rewritten
//! when the run ends.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{ExperimentConfig, SeedSource};
use crate::error::{LabError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: String,
    pub passed: bool,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_path: String,
    pub config_sha256: String,
    pub master_seed: u64,
    pub seed_source: SeedSource,
    pub output_dir: String,
    pub threads: usize,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub experiments: Vec<ExperimentConfig>,
    pub results: Vec<ManifestEntry>,
    pub error: Option<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| LabError::io(&path, e))
    }
}
