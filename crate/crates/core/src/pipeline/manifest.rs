//! Machine-readable record of a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ReconstructionConfig;
use super::io::digest_path;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ReconstructionConfig,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub runtime_s: f64,
    pub threads: usize,
}

impl RunManifest {
    pub fn new(command: &str, config: &ReconstructionConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            runtime_s: 0.0,
            threads: rayon::current_num_threads(),
        }
    }

    /// Records the digest of an input file or directory.
    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.to_path_buf(),
            sha256: digest_path(path)?,
        });
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            format: "manifest",
            reason: e.to_string(),
        })
    }
}
