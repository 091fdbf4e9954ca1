use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::CliError;

/// Bumped whenever a CSV header changes.
pub const CSV_SCHEMA: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            lines: vec![header.join(",")],
        }
    }

    pub fn push(&mut self, fields: Vec<String>) {
        self.lines.push(fields.join(","));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s.into_bytes()
    }
}

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs. Contains no
/// timing, so reruns reproduce it byte for byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: &'static str,
    pub threads: usize,
    pub csv_schema: u32,
    pub outputs: Vec<OutputDigest>,
}

/// Collects output files written for one command.
pub struct OutputSet {
    dir: PathBuf,
    started: Instant,
    outputs: Vec<OutputDigest>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(OutputDigest {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable report");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish<C: Serialize>(self, command: &str, config: &C, seed: u64) -> Result<PathBuf, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("serializable config"),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            csv_schema: CSV_SCHEMA,
            outputs: self.outputs,
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        eprintln!(
            "wrote {} files to {} in {:.2}s",
            manifest.outputs.len() + 1,
            self.dir.display(),
            self.started.elapsed().as_secs_f64()
        );
        Ok(path)
    }
}
