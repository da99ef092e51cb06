use rayon::prelude::*;
use serde::Serialize;

use super::{mesh_notch_hinge, Analysis, NotchHingeParams};
use crate::eig::eig_sym;
use crate::error::Result;
use crate::metrics::selectivity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepValues {
    pub lambda1: f64,
    pub lambda2: f64,
    pub selectivity: f64,
}

#[derive(Debug)]
pub struct SweepRow {
    /// Web thickness (mm).
    pub l: f64,
    pub result: Result<SweepValues>,
}

/// Eigenvalues and selectivity of the notch hinge for each web thickness,
/// all other parameters fixed. Rows come back in input order; a failing
/// geometry only fails its own row.
pub fn sweep_thickness(params: &NotchHingeParams, l_values: &[f64]) -> Vec<SweepRow> {
    l_values
        .par_iter()
        .map(|&l| SweepRow {
            l,
            result: analyze_thickness(params, l),
        })
        .collect()
}

fn analyze_thickness(params: &NotchHingeParams, l: f64) -> Result<SweepValues> {
    let analysis = Analysis::new(mesh_notch_hinge(&params.with_thickness(l))?)?;
    let basis = eig_sym(analysis.stiffness(), analysis.metric())?;
    Ok(SweepValues {
        lambda1: basis.eigenvalue(0),
        lambda2: basis.eigenvalue(1),
        selectivity: selectivity(&basis, 1)?.value,
    })
}
