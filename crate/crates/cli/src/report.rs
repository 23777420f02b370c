//! Report rows, CSV/JSON emission and the run summary.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// One checked (or informational) quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub metric: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl ReportRow {
    /// Passes when `|value| <= tol`.
    pub fn upper(scenario: &str, metric: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { scenario: scenario.into(), metric: metric.into(), value, tol, pass: value.abs() <= tol }
    }

    /// Passes when `value >= tol`.
    pub fn lower(scenario: &str, metric: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { scenario: scenario.into(), metric: metric.into(), value, tol, pass: value >= tol }
    }

    /// Recorded only; always passes.
    pub fn info(scenario: &str, metric: impl Into<String>, value: f64) -> Self {
        Self { scenario: scenario.into(), metric: metric.into(), value, tol: f64::INFINITY, pass: true }
    }

    pub fn flag(scenario: &str, metric: impl Into<String>, value: f64, tol: f64, pass: bool) -> Self {
        Self { scenario: scenario.into(), metric: metric.into(), value, tol, pass }
    }
}

pub const REPORT_HEADER: [&str; 5] = ["scenario", "metric", "value", "tol", "pass"];

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([r.scenario.clone(), r.metric.clone(), fmt_f64(r.value), fmt_f64(r.tol), r.pass.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>, String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(format!("unexpected header {header:?}"));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            let num = |i: usize| rec[i].parse::<f64>().map_err(|e| format!("{}: {e}", &rec[i]));
            Ok(ReportRow {
                scenario: rec[0].to_string(),
                metric: rec[1].to_string(),
                value: num(2)?,
                tol: num(3)?,
                pass: rec[4].parse().map_err(|e| format!("{}: {e}", &rec[4]))?,
            })
        })
        .collect()
}

/// A file produced by a scenario besides the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self { name: name.into(), contents: contents.into() }
    }

    fn format(&self) -> &str {
        Path::new(&self.name).extension().and_then(|e| e.to_str()).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub memsteer_cli: String,
    pub memsteer_core: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub command: String,
    pub all_pass: bool,
    pub rows: usize,
    pub failing_metrics: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    pub versions: Versions,
    pub wall_time_seconds: f64,
}

impl Summary {
    pub fn new(scenario: &str, command: &str, rows: &[ReportRow], seed: u64, config_hash: &str, wall_time_seconds: f64) -> Self {
        Self {
            scenario: scenario.into(),
            command: command.into(),
            all_pass: rows.iter().all(|r| r.pass),
            rows: rows.len(),
            failing_metrics: rows.iter().filter(|r| !r.pass).map(|r| r.metric.clone()).collect(),
            seed,
            config_hash: config_hash.into(),
            versions: Versions { memsteer_cli: env!("CARGO_PKG_VERSION").into(), memsteer_core: memsteer::VERSION.into() },
            wall_time_seconds,
        }
    }
}

/// Writes `report.csv`, `summary.json` and the artifacts whose extension is
/// among `formats`. Returns the written paths in order.
pub fn emit_report(rows: &[ReportRow], artifacts: &[Artifact], summary: &Summary, formats: &[String], directory: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(directory)?;
    let wants = |f: &str| formats.iter().any(|x| x == f);
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &str| -> io::Result<()> {
        let path = directory.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    if wants("csv") {
        put("report.csv", &rows_to_csv(rows))?;
    }
    if wants("json") {
        let json = serde_json::to_string_pretty(summary).map_err(|e| io::Error::new(io::ErrorKind::Other, e))?;
        put("summary.json", &json)?;
    }
    for a in artifacts.iter().filter(|a| wants(a.format())) {
        put(&a.name, &a.contents)?;
    }
    Ok(written)
}
