//! CSV and JSON emission plus the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Seventeen significant digits, enough to round-trip an `f64`.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes a CSV table; `footer` lines are written as `# ` comments.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>], footer: &[String]) -> Result<(), CliError> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    for line in footer {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    pub twa: u64,
    pub saddles: u64,
}

/// Everything needed to reproduce and audit a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub engine_version: String,
    pub command: String,
    pub config_sha256: Option<String>,
    pub config: serde_json::Value,
    pub seeds: Seeds,
    pub threads: usize,
    pub timings: Vec<Timing>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn digest_outputs(&mut self, dir: &Path, files: &[PathBuf]) -> Result<(), CliError> {
        for path in files {
            let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
            let file = path.strip_prefix(dir).unwrap_or(path).display().to_string();
            self.outputs.push(OutputFile {
                file,
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        Ok(())
    }
}
