use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use centaur::readout::FitReport;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::RunConfig;
use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    command: &'a str,
    config: RunConfig,
    seed: u64,
    result: &'a T,
}

/// Output directory of a run, created on demand.
pub struct Output {
    pub dir: PathBuf,
    pub command: &'static str,
    pub config: RunConfig,
    pub seed: u64,
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::invalid(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn new(command: &'static str, config: &RunConfig, seed: u64) -> Result<Self, Failure> {
        let dir = config
            .output_dir
            .clone()
            .ok_or_else(|| Failure::invalid("output_dir: required (config or --out)"))?;
        std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
        Ok(Self {
            dir,
            command,
            config: config.embedded(),
            seed,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `result` wrapped with the schema version, command, config and seed.
    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> Result<(), Failure> {
        let envelope = Envelope {
            schema_version: SCHEMA_VERSION,
            command: self.command,
            config: self.config.clone(),
            seed: self.seed,
            result,
        };
        let mut bytes = serde_json::to_vec_pretty(&envelope)
            .map_err(|e| Failure::invalid(format!("serializing {name}: {e}")))?;
        bytes.push(b'\n');
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| io_failure(&path, e))
    }

    pub fn jsonl<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.path(name);
        let mut out = std::io::BufWriter::new(File::create(&path).map_err(|e| io_failure(&path, e))?);
        for row in rows {
            serde_json::to_writer(&mut out, row).map_err(|e| io_failure(&path, e))?;
            out.write_all(b"\n").map_err(|e| io_failure(&path, e))?;
        }
        out.flush().map_err(|e| io_failure(&path, e))
    }

    pub fn csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let path = self.path(name);
        let mut writer = csv::Writer::from_path(&path).map_err(|e| io_failure(&path, e))?;
        for row in rows {
            writer.serialize(row).map_err(|e| io_failure(&path, e))?;
        }
        writer.flush().map_err(|e| io_failure(&path, e))
    }
}

/// The `result` of an artifact, or the whole file when it is a bare value.
pub fn read_result<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| io_failure(path, e))?;
    let value = match value {
        serde_json::Value::Object(mut map) if map.contains_key("schema_version") => {
            map.remove("result").ok_or_else(|| io_failure(path, "artifact has no result"))?
        }
        other => other,
    };
    serde_json::from_value(value).map_err(|e| io_failure(path, e))
}

pub fn read_report(path: &Path) -> Result<FitReport, Failure> {
    read_result(path)
}
