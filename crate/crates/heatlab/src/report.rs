//! Run reports: `summary.json`, per-check CSV tables and a separate
//! `timings.json`, so that everything except the timings is byte-stable
//! for a fixed configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{LabError, Result};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMINGS_FILE: &str = "timings.json";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&'static str]) -> Self {
        Table { file: file.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub enum Artifact {
    Csv(Table),
    Json { file: String, value: Value },
    Text { file: String, body: String },
}

impl Artifact {
    pub fn file(&self) -> &str {
        match self {
            Artifact::Csv(t) => &t.file,
            Artifact::Json { file, .. } | Artifact::Text { file, .. } => file,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub results: Value,
    #[serde(skip)]
    pub artifacts: Vec<Artifact>,
    #[serde(skip)]
    pub seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, config: Value) -> Self {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            outputs: Vec::new(),
            checks: Vec::new(),
            passed: true,
            results: Value::Null,
            artifacts: Vec::new(),
            seconds: 0.0,
        }
    }

    pub fn check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn attach(&mut self, artifact: Artifact) {
        self.outputs.push(artifact.file().to_string());
        self.artifacts.push(artifact);
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes every artifact, then `summary.json` and `timings.json`. Returns the
/// paths written, summary last but one.
pub fn emit_report(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = Vec::new();
    for artifact in &report.artifacts {
        let path = dir.join(artifact.file());
        match artifact {
            Artifact::Csv(table) => {
                let mut w = csv::Writer::from_path(&path).map_err(|e| match e.into_kind() {
                    csv::ErrorKind::Io(io) => LabError::io(&path, io),
                    other => LabError::Usage(format!("{other:?}")),
                })?;
                w.write_record(&table.header)?;
                for row in &table.rows {
                    w.write_record(row)?;
                }
                w.flush().map_err(|e| LabError::io(&path, e))?;
            }
            Artifact::Json { value, .. } => write(&path, &json_bytes(value)?)?,
            Artifact::Text { body, .. } => write(&path, body.as_bytes())?,
        }
        written.push(path);
    }
    let summary = dir.join(SUMMARY_FILE);
    write(&summary, &json_bytes(report)?)?;
    written.push(summary);
    let timings = dir.join(TIMINGS_FILE);
    write(&timings, &json_bytes(&serde_json::json!({ "wall_seconds": report.seconds }))?)?;
    written.push(timings);
    Ok(written)
}

/// Aligned plain-text rendering of a table for terminals.
pub fn render_pretty(table: &Table) -> String {
    let cells: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| match c.parse::<f64>() {
                    Ok(v) if c.contains('e') => format!("{v:.6}"),
                    _ => c.clone(),
                })
                .collect()
        })
        .collect();
    let mut widths: Vec<usize> = table.header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |row: &mut dyn Iterator<Item = &str>| {
        row.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
    };
    let mut out = format!("{}\n", table.file);
    out += &line(&mut table.header.iter().copied());
    out.push('\n');
    for row in &cells {
        out += &line(&mut row.iter().map(String::as_str));
        out.push('\n');
    }
    out
}
