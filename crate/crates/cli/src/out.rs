//! Run-directory plumbing: artifact writing and manifests.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Resolves the run directory: explicit flag, else `$CKY_OUTPUT_ROOT/<cmd>`,
/// else `./runs/<cmd>`.
pub fn run_dir(explicit: &Option<PathBuf>, command: &str) -> Result<PathBuf> {
    let dir = match explicit {
        Some(d) => d.clone(),
        None => match std::env::var_os(crate::OUTPUT_ROOT_ENV) {
            Some(root) => PathBuf::from(root).join(command),
            None => PathBuf::from("runs").join(command),
        },
    };
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating run directory {}", dir.display()))?;
    Ok(dir)
}

pub fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write(dir, name, &text)
}

/// Reproducibility manifest: the resolved configuration, its hash, and the
/// artifact list. No timestamps — re-runs must be byte-identical.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let canonical = serde_json::to_string(&config).expect("serializable config");
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(canonical.as_bytes());
        let config_hash = format!("{:x}", hasher.finalize());
        Manifest {
            command: command.to_string(),
            config,
            config_hash,
            artifacts: Vec::new(),
        }
    }

    pub fn finish(mut self, dir: &Path, artifacts: &[&str]) -> Result<()> {
        self.artifacts = artifacts.iter().map(|s| s.to_string()).collect();
        write_json(dir, "manifest.json", &self)
    }
}
