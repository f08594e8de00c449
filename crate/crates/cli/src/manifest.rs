use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

#[derive(Debug, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub config_hash: Option<String>,
    pub inputs: Vec<FileHash>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

pub struct ManifestBuilder {
    command: String,
    config: Option<(String, String)>,
    inputs: Vec<PathBuf>,
    seed: Option<u64>,
    started: SystemTime,
    clock: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            config: None,
            inputs: Vec::new(),
            seed: None,
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    pub fn config(mut self, path: &Path, hash: String) -> Self {
        self.config = Some((path.display().to_string(), hash));
        self
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Hashes inputs and outputs and writes the manifest to `dest`.
    pub fn write(self, outputs: &[PathBuf], dest: &Path) -> CliResult<()> {
        let hash_all = |ps: &[PathBuf]| -> CliResult<Vec<FileHash>> {
            ps.iter().map(|p| Ok(FileHash { path: p.display().to_string(), sha256: sha256_file(p)? })).collect()
        };
        let (config_path, config_hash) = match self.config {
            Some((p, h)) => (Some(p), Some(h)),
            None => (None, None),
        };
        let m = RunManifest {
            command: self.command,
            config_path,
            config_hash,
            inputs: hash_all(&self.inputs)?,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: self.started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
            outputs: hash_all(outputs)?,
        };
        std::fs::write(dest, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(())
    }
}
