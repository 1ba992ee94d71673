//! Output files. Everything except `timing.json` is a function of the
//! configuration and seeds alone.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    write_file(path, &text)
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputRecord {
    pub fn hash_all(files: &[PathBuf]) -> CliResult<Vec<InputRecord>> {
        files
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
                Ok(InputRecord { path: p.clone(), sha256: iaoqsim::bundle::sha256_hex(&bytes) })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub cli: &'static str,
    pub core: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Versions { cli: env!("CARGO_PKG_VERSION"), core: iaoqsim::VERSION }
    }
}

/// Written before any work starts and rewritten when the run ends, so a
/// failed run still says what was attempted.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub versions: Versions,
    pub command: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub point_seeds: Vec<u64>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
    /// Wall time lives in this file.
    pub timing: &'static str,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64, point_seeds: Vec<u64>, inputs: Vec<InputRecord>) -> Self {
        Manifest {
            tool: "iaoqsim",
            versions: Versions::current(),
            command: command.to_string(),
            status: "running",
            error: None,
            config,
            seed,
            point_seeds,
            inputs,
            outputs: Vec::new(),
            timing: "timing.json",
        }
    }

    pub fn finish(&mut self, outputs: Vec<String>) {
        self.status = "ok";
        self.outputs = outputs;
    }

    pub fn fail(&mut self, e: &CliError) {
        self.status = "failed";
        self.error = Some(e.to_string());
    }

    pub fn save(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}

pub fn write_timing(dir: &Path, wall: Duration) -> CliResult<()> {
    write_json(&dir.join("timing.json"), &serde_json::json!({ "wall_seconds": wall.as_secs_f64() }))
}
