use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{CliError, RunConfig};

pub const RESULTS_CSV: &str = "results.csv";
pub const RUN_LOG: &str = "run.jsonl";
pub const PLOT_DAT: &str = "plot.dat";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Rejects NaN and infinities, naming the column.
    pub fn check_finite(&self) -> Result<(), CliError> {
        for row in &self.rows {
            for (cell, col) in row.iter().zip(&self.header) {
                if let Cell::Num(v) = cell {
                    if !v.is_finite() {
                        return Err(CliError::NonFinite((*col).into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        self.check_finite()?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                // Shortest round-trip representation.
                Cell::Num(v) => format!("{v:e}"),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
                Cell::Bool(b) => b.to_string(),
            }))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Named `(x, y)` series for external plotting.
#[derive(Debug, Clone, Default)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

/// Two-column text, one block per series separated by blank lines.
pub fn write_plot(series: &[Series], path: &Path) -> Result<(), CliError> {
    let mut out = String::new();
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {}\n", s.name));
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                return Err(CliError::NonFinite(format!("plot series `{}`", s.name)));
            }
            out.push_str(&format!("{x:e} {y:e}\n"));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub version: &'static str,
    pub timestamp: String,
    pub config: &'a RunConfig,
    pub passed: bool,
    pub error: Option<String>,
    pub results: &'a serde_json::Value,
    pub wall_time: f64,
}

pub fn version() -> &'static str {
    env!("QUADRIC_ASYM_DESCRIBE")
}

/// Append one record as a single line.
pub fn append_record(record: &RunRecord<'_>, path: &Path) -> Result<(), CliError> {
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_lf_and_rejects_nan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![0.1.into(), "x".into()]);
        t.write_csv(&path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1e-1,x\n");
        t.push(vec![f64::NAN.into(), "y".into()]);
        assert!(matches!(t.write_csv(&path), Err(CliError::NonFinite(c)) if c == "a"));
    }

    #[test]
    fn plot_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.dat");
        write_plot(
            &[
                Series::new("one", vec![(1.0, 2.0)]),
                Series::new("two", vec![(3.0, 4.0)]),
            ],
            &path,
        )
        .unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "# one\n1e0 2e0\n\n\n# two\n3e0 4e0\n"
        );
    }
}
