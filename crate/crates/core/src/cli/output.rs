//! Result records, tables and their files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, ScatterError};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    /// `[re, im]` in JSON, a `re_*`, `im_*` column pair in CSV.
    Complex(Complex64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Complex64> for Cell {
    fn from(v: Complex64) -> Self {
        Cell::Complex(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    /// CSV text: a `#` comment line, the header, then the rows.
    pub fn to_csv(&self, comment: &str) -> String {
        let mut out = format!("# {comment}\n");
        let complex: Vec<bool> = (0..self.columns.len())
            .map(|j| self.rows.iter().any(|r| matches!(r[j], Cell::Complex(_))))
            .collect();
        let header: Vec<String> = self
            .columns
            .iter()
            .zip(&complex)
            .map(|(c, &z)| if z { format!("re_{c},im_{c}") } else { c.clone() })
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .zip(&complex)
                .map(|(cell, &z)| match cell {
                    Cell::Complex(v) => format!("{},{}", number(v.re), number(v.im)),
                    Cell::Real(v) if z => format!("{},0", number(*v)),
                    Cell::Real(v) => number(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Bool(b) => b.to_string(),
                    Cell::Text(s) => quote(s),
                })
                .collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

/// Shortest round-trip form; scientific outside `[1e-4, 1e6)`.
pub fn number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub crate_version: String,
    pub modules: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
    /// Every warning raised by a module, verbatim.
    pub flags: Vec<String>,
    pub strict: bool,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub id: String,
    pub experiment: String,
    pub config_sha256: String,
    pub input: serde_json::Value,
    pub summary: serde_json::Value,
    pub tables: Vec<Table>,
    pub provenance: Provenance,
}

impl ResultRecord {
    fn csv_path(&self, dir: &Path, table: &Table) -> PathBuf {
        if self.tables.len() == 1 {
            dir.join(format!("{}.csv", self.id))
        } else {
            dir.join(format!("{}_{}.csv", self.id, table.name))
        }
    }

    /// Writes `<id>.json` and one CSV per table; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let io = |e: std::io::Error, p: &Path| ScatterError::Config(format!("cannot write {}: {e}", p.display()));
        fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.id));
        let text = serde_json::to_string_pretty(self).expect("record serializes");
        fs::write(&json, text + "\n").map_err(|e| io(e, &json))?;
        written.push(json);
        for t in &self.tables {
            let path = self.csv_path(dir, t);
            let comment = format!(
                "scatterlab {} experiment={} id={} table={} config_sha256={}",
                self.provenance.crate_version, self.experiment, self.id, t.name, self.config_sha256
            );
            fs::write(&path, t.to_csv(&comment)).map_err(|e| io(e, &path))?;
            written.push(path);
        }
        Ok(written)
    }
}
