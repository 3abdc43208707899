//! Artifact writing and the run manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(cfg: &ScenarioConfig) -> CliResult<String> {
    let canonical = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub n_reps: usize,
    pub schema_version: u32,
    pub version: &'static str,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &ScenarioConfig) -> CliResult<Self> {
        Ok(Self {
            command: command.to_string(),
            config_sha256: config_hash(cfg)?,
            seed: cfg.seed,
            n_reps: cfg.mc.n_reps,
            schema_version: cfg.schema_version,
            version: env!("CARGO_PKG_VERSION"),
            artifacts: Vec::new(),
        })
    }
}

/// Output directory that records every artifact it writes.
pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_with<F>(&mut self, name: &str, body: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.root.join(name);
        let io_err = |source| CliError::Io { path: path.clone(), source };
        let file = fs::File::create(&path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_with(name, |w| writeln!(w, "{text}"))
    }

    pub fn finish(mut self, mut manifest: Manifest) -> CliResult<Vec<String>> {
        manifest.artifacts = self.written.clone();
        self.write_json("manifest.json", &manifest)?;
        Ok(self.written)
    }
}
