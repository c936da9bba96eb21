use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::exit::CliError;

/// Record of one command invocation, written as `manifest.json` in the output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    /// sha256 of each input file's bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

pub struct Run {
    manifest: RunManifest,
    started: Instant,
    out_dir: PathBuf,
}

impl Run {
    pub fn start(command: &str, out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Self {
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: None,
                config: Value::Null,
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
                wall_time_s: 0.0,
            },
            started: Instant::now(),
            out_dir: out_dir.to_path_buf(),
        })
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn config<S: Serialize>(&mut self, config: &S) {
        self.manifest.config = serde_json::to_value(config).unwrap_or(Value::Null);
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(bytes)
    }

    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(path)
    }

    pub fn finish(mut self) -> Result<RunManifest, CliError> {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        let path = self.out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        Ok(self.manifest)
    }
}
