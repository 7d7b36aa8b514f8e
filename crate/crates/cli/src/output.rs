use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use vqe_basin::diagnostics::CsvTable;

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    config: &'a str,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
    wall_time_s: f64,
}

/// Collects inputs and outputs of one run and writes them with a manifest.
pub struct Run {
    pub command: String,
    pub seed: Option<u64>,
    config_echo: String,
    out_dir: PathBuf,
    stamp: u64,
    started: Instant,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    pub fn new(
        command: &str,
        seed: Option<u64>,
        config_echo: String,
        out_dir: &Path,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Self {
            command: command.into(),
            seed,
            config_echo,
            out_dir: out_dir.to_path_buf(),
            stamp,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Reads an input file and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    fn stem(&self, name: &str) -> String {
        format!("{name}_{}_{}", self.stamp, self.seed.unwrap_or(0))
    }

    pub fn write(&mut self, file_name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(file_name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(FileDigest {
            path: file_name.into(),
            sha256: sha256_hex(body.as_bytes()),
        });
        Ok(path)
    }

    /// `<name>_<timestamp>_<seed>.csv` with the config and seed echoed as comments.
    pub fn write_csv(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf, CliError> {
        let mut header = vec![
            ("command".to_string(), self.command.clone()),
            (
                "seed".to_string(),
                self.seed.map_or("none".into(), |s| s.to_string()),
            ),
        ];
        header.extend(
            self.config_echo
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| ("config".to_string(), l.to_string())),
        );
        let body = table.to_csv(&header);
        let name = format!("{}.csv", self.stem(name));
        self.write(&name, &body)
    }

    pub fn write_json(&mut self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let name = format!("{}.json", self.stem(name));
        self.write(&name, body)
    }

    pub fn finish(self) -> Result<PathBuf, CliError> {
        let m = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config: &self.config_echo,
            inputs: &self.inputs,
            outputs: &self.outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let path = self.out_dir.join(format!(
            "{}.json",
            self.stem(&format!("{}_manifest", self.command))
        ));
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
