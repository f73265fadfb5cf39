//! CSV tables and the run manifest.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Params, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    /// Written as `{:.16e}`.
    Float(f64),
    /// Written with the shortest exact representation (e.g. `m` labels).
    Exact(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) if v.is_nan() => "NaN".into(),
            Cell::Float(v) if *v == 0.0 => format!("{:.16e}", 0.0),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Exact(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: impl Into<String>, header: &[&'static str]) -> Self {
        Self { file: file.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| crate::LabError::Io(e.into_error()))
    }
}

/// What a command produced before it is written out.
#[derive(Clone, Debug, Default)]
pub struct CommandResult {
    pub tables: Vec<Table>,
    pub warnings: u64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
    pub rows: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Params,
    pub version: String,
    pub jobs: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputRecord>,
    pub warnings: u64,
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn write_run(
    dir: &Path,
    command: &str,
    params: &Params,
    result: CommandResult,
    jobs: usize,
    start: Instant,
) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for table in &result.tables {
        let bytes = table.to_bytes()?;
        let path = dir.join(&table.file);
        fs::write(&path, &bytes)?;
        outputs.push(OutputRecord {
            file: path.display().to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
            rows: table.rows.len() as u64,
        });
    }
    let manifest = RunManifest {
        command: command.to_string(),
        params: params.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        jobs,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        warnings: result.warnings,
        notes: result.notes,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join(format!("{command}.manifest.json")), json)?;
    Ok(manifest)
}
