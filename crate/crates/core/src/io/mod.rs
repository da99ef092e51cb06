//! File formats: Matrix Market matrices, JSON models, DOF maps, reference
//! kinematics and reports.
//!
//! Every floating-point value is written with 17 significant digits so that
//! write/read round trips are lossless.

mod json;
mod mtx;
mod report;

use std::path::Path;

use crate::error::{Error, Result};

pub use json::{
    dofmap_to_json, model_to_json, parse_dofmap, parse_model, parse_reference, read_dofmap, read_model, read_reference,
    reference_to_json, to_json_string, write_dofmap, write_model, write_reference, ModelSource, Parsed, ReferenceFile,
    Strictness, SCHEMA_VERSION,
};
pub use mtx::{format_matrix_market, parse_matrix_market, read_matrix_market, write_matrix_market};
pub use report::{sweep_csv, write_json_report, write_sweep, Report, ReportFormat, RunInfo, SweepRecord, SweepTable};

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
