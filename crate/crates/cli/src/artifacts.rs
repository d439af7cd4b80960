//! Files written by the commands: result tables, line-delimited logs and
//! run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use covert_core::evaluation::{Row, Scenario};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io("cannot create", dir, e))
}

pub fn write_rows(path: &Path, rows: &[Row]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| CliError::io("cannot write", path, e))
}

pub fn read_rows(path: &Path) -> CliResult<Vec<Row>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<Row>, _>>()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Writes one JSON document per line.
pub struct JsonLines {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonLines {
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io("cannot create", path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        serde_json::to_writer(&mut self.out, value)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", self.path.display())))?;
        self.out
            .write_all(b"\n")
            .map_err(|e| CliError::io("cannot write", &self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.out
            .flush()
            .map_err(|e| CliError::io("cannot write", &self.path, e))
    }
}

/// Unit conversions applied while resolving the scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conversions {
    pub power_dbm: f64,
    pub power_mw: f64,
    pub bob_snr_db: f64,
    pub bob_noise_variance: f64,
}

impl Conversions {
    pub fn of(scenario: &Scenario) -> Self {
        Self {
            power_dbm: 10.0 * scenario.power.log10(),
            power_mw: scenario.power,
            bob_snr_db: scenario.bob_snr_db(),
            bob_noise_variance: scenario.bob.noise_variance,
        }
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub workers: usize,
    pub config: &'a RunConfig,
    pub scenario: &'a Scenario,
    pub conversions: Conversions,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig, scenario: &'a Scenario) -> Self {
        Self {
            tool: "covert",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config.hash(),
            seeds: vec![config.seed],
            workers: 1,
            config,
            scenario,
            conversions: Conversions::of(scenario),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifests serialize");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io("cannot write", path, e))
    }
}

pub fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
