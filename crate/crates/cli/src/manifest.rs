//! Run manifest: every command writes one, referencing every output file.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// FNV-1a hash of the canonical config JSON.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub command: String,
    pub outputs: Vec<String>,
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl RunManifest {
    pub fn new(command: &str, config_json: &str, seed: u64) -> Self {
        RunManifest {
            config_hash: format!("{:016x}", fnv1a(config_json.as_bytes())),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) {
        self.outputs.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self).unwrap())?;
        Ok(path)
    }
}
