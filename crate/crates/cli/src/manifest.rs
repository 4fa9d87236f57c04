//! Run manifest: the reproduction recipe for a batch run.
//!
//! The manifest carries the canonical config echo and the master seed; a run
//! is reproducible from the manifest alone by writing the echo back to a
//! file and re-invoking the same subcommand. Wall-clock timestamps live only
//! here, so every other emitted file is bit-for-bit reproducible.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use qareg_core::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: String,
    /// Canonical TOML re-serialization of the resolved config (seed override
    /// applied).
    pub config_echo: String,
    pub tool_version: String,
    pub master_seed: Option<u64>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// Every file this run emitted, relative to the output directory.
    pub outputs: Vec<String>,
}

pub struct RunContext {
    subcommand: String,
    config_path: PathBuf,
    out_dir: PathBuf,
    started_unix_ms: u64,
    outputs: Vec<String>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl RunContext {
    pub fn new(subcommand: &str, config_path: &Path, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            subcommand: subcommand.to_string(),
            config_path: config_path.to_path_buf(),
            out_dir: out_dir.to_path_buf(),
            started_unix_ms: now_ms(),
            outputs: Vec::new(),
        })
    }

    pub fn config_dir(&self) -> PathBuf {
        self.config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }

    /// Writes one output file and records it for the manifest.
    pub fn write_output(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        fs::write(self.out_dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes the manifest and verifies every declared output exists.
    pub fn finish(self, config_echo: String, master_seed: Option<u64>) -> Result<()> {
        let manifest = RunManifest {
            subcommand: self.subcommand,
            config_path: self.config_path.display().to_string(),
            config_echo,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            started_unix_ms: self.started_unix_ms,
            finished_unix_ms: now_ms(),
            outputs: self.outputs.clone(),
        };
        let json = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| CoreError::InvalidArgument(format!("manifest serialization: {e}")))?;
        fs::write(self.out_dir.join("manifest.json"), json)?;
        for name in &self.outputs {
            if !self.out_dir.join(name).is_file() {
                return Err(CoreError::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("declared output {name} missing"),
                )));
            }
        }
        Ok(())
    }
}

pub fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        CoreError::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
    })
}
