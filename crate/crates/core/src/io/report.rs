use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{format_f64, to_json_string, write_text};
use crate::error::Result;
use crate::fem::SweepRow;

/// Provenance fields stamped on every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub tool_version: String,
    /// SHA-256 of the input file bytes, hex.
    pub input_digest: String,
    pub seed: Option<u64>,
}

/// A report body with its provenance, flattened into one JSON object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report<T> {
    #[serde(flatten)]
    pub info: RunInfo,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// CSV for a `.csv` extension, JSON otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

pub fn write_json_report<T: Serialize>(report: &Report<T>, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &to_json_string(report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub l_mm: f64,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub selectivity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRecord>,
}

impl SweepTable {
    pub fn from_rows(rows: &[SweepRow]) -> Self {
        let rows = rows
            .iter()
            .map(|r| match &r.result {
                Ok(v) => SweepRecord {
                    l_mm: r.l,
                    lambda1: Some(v.lambda1),
                    lambda2: Some(v.lambda2),
                    selectivity: Some(v.selectivity),
                    error: None,
                },
                Err(e) => SweepRecord {
                    l_mm: r.l,
                    lambda1: None,
                    lambda2: None,
                    selectivity: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        SweepTable { rows }
    }
}

/// Header plus one line per row; failed rows leave their values empty.
pub fn sweep_csv(table: &SweepTable) -> String {
    let cell = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    let mut s = String::from("l_mm,lambda1,lambda2,selectivity\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            format_f64(r.l_mm),
            cell(r.lambda1),
            cell(r.lambda2),
            cell(r.selectivity)
        );
    }
    s
}

pub fn write_sweep(report: &Report<SweepTable>, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ReportFormat::Csv => write_text(path, &sweep_csv(&report.body)),
        ReportFormat::Json => write_json_report(report, path),
    }
}
