//! Run manifests.
//!
//! Every output gets a sibling manifest recording the subcommand, the
//! fully resolved configuration, the seed, the tool version and content
//! digests of all inputs — enough to re-run the command bit-identically.
//! The manifest itself carries a timestamp and is the only non-reproducible
//! artifact; the data outputs contain none.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub resolved_config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub input_digests: BTreeMap<String, String>,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, resolved_config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            resolved_config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digests: BTreeMap::new(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("cannot read input {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.input_digests
            .insert(path.display().to_string(), format!("sha256:{digest}"));
        Ok(())
    }

    /// Write next to `output` as `<output>.manifest.json`.
    pub fn write_for(&self, output: &Path) -> Result<()> {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path: PathBuf = output.with_file_name(name);
        self.write_to(&path)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("cannot write manifest {}", path.display()))?;
        Ok(())
    }
}
