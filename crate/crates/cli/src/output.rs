//! CSV and JSON emission. CSV floats use Rust's shortest round-trip
//! formatting, so identical runs produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Column-oriented table written as CSV with a header row.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        let row = cells
            .into_iter()
            .map(|c| match c {
                Cell::Float(v) => {
                    if v.is_finite() {
                        format!("{v}")
                    } else {
                        // NaN sentinels (projection steps have no gamma)
                        format!("{v}")
                    }
                }
                Cell::Int(v) => format!("{v}"),
                Cell::Text(v) => v,
            })
            .collect();
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut out = Vec::with_capacity(64 * (self.rows.len() + 1));
        writeln!(out, "{}", self.header.join(",")).expect("in-memory write");
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).expect("in-memory write");
        }
        std::fs::write(path, out)
            .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display())))
    }
}

/// Output paths derived from the spec's output stem.
pub fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("csv"), stem.with_extension("json"))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable summary");
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write `{}`: {e}", path.display())))
}
