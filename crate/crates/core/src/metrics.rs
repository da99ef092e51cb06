//! Precision and accuracy measures built on a [`ModalBasis`].
//!
//! * selectivity `S = λ_{p+1} / λ_p` (precision),
//! * accuracy index `δ = |φ_1ᵀ W φ_r|` and its subspace form `δ_e`,
//! * modal forces, amplitudes and the static response assembled from them,
//! * case-specific kinematic readouts (rigid-motion fit, path deviation).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dof::{check_len, DofMap, DofMetric, NodeId, ReferenceKinematics, StiffnessMatrix, ORTHONORMAL_TOLERANCE};
use crate::eig::{eig_sym, symmetric_eigen, ModalBasis};
use crate::error::{Error, Result};

/// Angles below this magnitude (rad) are reported as pure translation.
pub const ROTATION_THRESHOLD: f64 = 1e-12;

/// Default number of eigenvalues listed in a report.
pub const DEFAULT_EIGEN_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Selectivity {
    pub value: f64,
    /// `λ_p` and `λ_{p+1}` are coincident.
    pub degenerate: bool,
}

/// `λ_{p+1} / λ_p` for pseudo-mobility `p`.
pub fn selectivity(basis: &ModalBasis, p: usize) -> Result<Selectivity> {
    if p == 0 || p >= basis.n() {
        return Err(Error::invalid(format!(
            "pseudo-mobility {p} out of range 1..{} for {} DOFs",
            basis.n(),
            basis.n()
        )));
    }
    Ok(Selectivity {
        value: basis.eigenvalue(p) / basis.eigenvalue(p - 1),
        degenerate: basis.is_degenerate_pair(p - 1),
    })
}

/// `|φ_1ᵀ W φ_r|` after scaling both vectors to unit metric norm.
pub fn accuracy_index(phi1: &DVector<f64>, phi_r: &DVector<f64>, w: &DofMetric) -> Result<f64> {
    let a = w.normalize(phi1)?;
    let b = w.normalize(phi_r)?;
    Ok(w.inner(&a, &b).abs().min(1.0))
}

/// Cosine of the largest principal angle between `span(Φ_e)` and `span(Φ_r)`:
/// `√β_1` with `β_1` the smallest eigenvalue of `Φ_rᵀ W Φ_e Φ_eᵀ W Φ_r`.
///
/// Both blocks must have the same number of metric-orthonormal columns.
pub fn extended_accuracy_index(phi_e: &DMatrix<f64>, phi_r: &DMatrix<f64>, w: &DofMetric) -> Result<f64> {
    let p = phi_e.ncols();
    if p == 0 || phi_r.ncols() != p {
        return Err(Error::invalid(format!(
            "column count mismatch: {} natural vs {} reference vectors",
            p,
            phi_r.ncols()
        )));
    }
    check_len("natural kinematics", phi_e.nrows(), w.n())?;
    check_len("reference kinematics", phi_r.nrows(), w.n())?;
    check_orthonormal("natural kinematics", phi_e, w)?;
    check_orthonormal("reference kinematics", phi_r, w)?;
    if p == 1 {
        return accuracy_index(&phi_e.column(0).into_owned(), &phi_r.column(0).into_owned(), w);
    }
    subspace_cosine(phi_e, phi_r, w)
}

fn subspace_cosine(phi_e: &DMatrix<f64>, phi_r: &DMatrix<f64>, w: &DofMetric) -> Result<f64> {
    let c = w.gram(phi_r, phi_e);
    let m = &c * c.transpose();
    let (beta, _) = symmetric_eigen(&m)?;
    Ok(beta[0].max(0.0).sqrt().min(1.0))
}

fn check_orthonormal(what: &str, phi: &DMatrix<f64>, w: &DofMetric) -> Result<()> {
    let g = w.gram(phi, phi);
    let dev = (g - DMatrix::identity(phi.ncols(), phi.ncols())).amax();
    if dev > ORTHONORMAL_TOLERANCE {
        return Err(Error::invalid(format!(
            "{what} columns are not metric-orthonormal (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// `q_i = φ_iᵀ f`.
pub fn modal_forces(basis: &ModalBasis, f: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("force", f.len(), basis.n())?;
    Ok(basis.eigenvectors().tr_mul(f))
}

/// `a_i = q_i / λ_i`.
pub fn modal_amplitudes(basis: &ModalBasis, f: &DVector<f64>) -> Result<DVector<f64>> {
    let q = modal_forces(basis, f)?;
    let mut a = q;
    for (i, ai) in a.iter_mut().enumerate() {
        let l = basis.eigenvalue(i);
        if !(l > 0.0) {
            return Err(Error::ModelSingular {
                mode: i + 1,
                eigenvalue: l,
                limit: 0.0,
                detail: String::new(),
            });
        }
        *ai /= l;
    }
    Ok(a)
}

/// Static response `u = Σ a_i φ_i`; equals the solution of `k u = f`.
pub fn modal_response(basis: &ModalBasis, f: &DVector<f64>) -> Result<DVector<f64>> {
    let a = modal_amplitudes(basis, f)?;
    Ok(basis.eigenvectors() * a)
}

/// Fraction `Σ_{i≤p} a_i² / Σ_i a_i²` of the response carried by the first
/// `p` modes. Since the modes are W-orthonormal this is the W-norm² share.
pub fn dominance_share(basis: &ModalBasis, f: &DVector<f64>, p: usize) -> Result<f64> {
    if p == 0 || p > basis.n() {
        return Err(Error::invalid(format!("mode count {p} out of range")));
    }
    let a = modal_amplitudes(basis, f)?;
    let total = a.norm_squared();
    if !(total > 0.0) {
        return Err(Error::invalid("dominance share of a zero response"));
    }
    Ok(a.rows(0, p).norm_squared() / total)
}

/// W-norm² fraction of `u` carried by out-of-plane DOFs (TZ, RX, RY).
pub fn out_of_plane_share(u: &DVector<f64>, dof_map: &DofMap, w: &DofMetric) -> Result<f64> {
    check_len("vector", u.len(), dof_map.n_free())?;
    let total = w.inner(u, u);
    if !(total > 0.0) {
        return Err(Error::invalid("out-of-plane share of a zero vector"));
    }
    let oop: f64 = dof_map
        .free_entries()
        .enumerate()
        .filter(|(_, e)| e.dir.is_out_of_plane())
        .map(|(i, _)| w.diag()[i] * u[i] * u[i])
        .sum();
    Ok(oop / total)
}

/// Maps an analysis-space vector to nodal translations.
///
/// Implemented by model wrappers that know how eliminated DOFs (rigid-link
/// slaves, condensed interior nodes) follow the retained ones.
pub trait NodalReadout {
    fn translation(&self, u: &DVector<f64>, node: NodeId) -> Result<[f64; 3]>;
    fn position(&self, node: NodeId) -> Option<[f64; 3]>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidFit {
    /// In-plane rotation about Z (rad, linearized).
    pub angle: f64,
    /// Instantaneous center of rotation; `None` when translation-dominated.
    pub center: Option<[f64; 2]>,
    /// Fitted translation of the node centroid.
    pub centroid_translation: [f64; 2],
    /// RMS per-node misfit (mm).
    pub residual: f64,
    /// Share of the fitted field's squared norm due to rotation about the centroid.
    pub rotation_share: f64,
}

impl RigidFit {
    pub fn is_translation(&self) -> bool {
        self.center.is_none()
    }
}

/// Least-squares planar rigid motion `u_x = −θ(y − y₀)`, `u_y = θ(x − x₀)`
/// (plus a translation when θ vanishes) through the in-plane translations of
/// `nodes`.
pub fn fit_rigid_motion(u: &DVector<f64>, nodes: &[NodeId], readout: &impl NodalReadout) -> Result<RigidFit> {
    if nodes.len() < 3 {
        return Err(Error::invalid(format!(
            "rigid fit needs at least 3 nodes, got {}",
            nodes.len()
        )));
    }
    let mut pts = Vec::with_capacity(nodes.len());
    for &n in nodes {
        let p = readout
            .position(n)
            .ok_or_else(|| Error::invalid(format!("node {n} has no position")))?;
        let t = readout.translation(u, n)?;
        pts.push(([p[0], p[1]], [t[0], t[1]]));
    }
    let count = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0[0]).sum::<f64>() / count;
    let cy = pts.iter().map(|p| p.0[1]).sum::<f64>() / count;

    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (p, _) in &pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let small = tr / 2.0 - ((sxx - syy).powi(2) / 4.0 + sxy * sxy).sqrt();
    if !(tr > 0.0) || small <= 1e-12 * tr || det <= 0.0 {
        return Err(Error::invalid("rigid fit nodes are collinear or coincident"));
    }

    let tx = pts.iter().map(|p| p.1[0]).sum::<f64>() / count;
    let ty = pts.iter().map(|p| p.1[1]).sum::<f64>() / count;
    let num: f64 = pts.iter().map(|(p, t)| -(p[1] - cy) * t[0] + (p[0] - cx) * t[1]).sum();
    let theta = num / tr;

    let mut sq = 0.0;
    for (p, t) in &pts {
        let fx = tx - theta * (p[1] - cy);
        let fy = ty + theta * (p[0] - cx);
        sq += (t[0] - fx).powi(2) + (t[1] - fy).powi(2);
    }
    let residual = (sq / count).sqrt();

    let rot = theta * theta * tr;
    let trans = count * (tx * tx + ty * ty);
    let rotation_share = if rot + trans > 0.0 { rot / (rot + trans) } else { 0.0 };

    let center = (theta.abs() >= ROTATION_THRESHOLD).then(|| [cx - ty / theta, cy + tx / theta]);
    Ok(RigidFit {
        angle: theta,
        center,
        centroid_translation: [tx, ty],
        residual,
        rotation_share,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathDeviation {
    /// Euclidean distance per node (mm per unit metric norm).
    pub per_node: Vec<(NodeId, f64)>,
    pub rms: f64,
}

/// Per-node distance between the translations under `phi_nat` and `phi_ref`,
/// both scaled to unit W-norm with signs aligned so that `φ_natᵀ W φ_ref ≥ 0`.
pub fn path_deviation(
    phi_nat: &DVector<f64>,
    phi_ref: &DVector<f64>,
    nodes: &[NodeId],
    readout: &impl NodalReadout,
    w: &DofMetric,
) -> Result<PathDeviation> {
    if nodes.is_empty() {
        return Err(Error::invalid("path deviation needs at least one node"));
    }
    let a = w.normalize(phi_nat)?;
    let mut b = w.normalize(phi_ref)?;
    if w.inner(&a, &b) < 0.0 {
        b.neg_mut();
    }
    let mut per_node = Vec::with_capacity(nodes.len());
    let mut sq = 0.0;
    for &n in nodes {
        let ta = readout.translation(&a, n)?;
        let tb = readout.translation(&b, n)?;
        let d = ((ta[0] - tb[0]).powi(2) + (ta[1] - tb[1]).powi(2) + (ta[2] - tb[2]).powi(2)).sqrt();
        sq += d * d;
        per_node.push((n, d));
    }
    Ok(PathDeviation {
        per_node,
        rms: (sq / nodes.len() as f64).sqrt(),
    })
}

/// Summary of a precision/accuracy assessment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentReport {
    pub n_dof: usize,
    /// The first `min(m, n)` eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub pseudo_mobility: usize,
    pub selectivity: f64,
    pub selectivity_degenerate: bool,
    /// Coincidence flag per adjacent pair of listed eigenvalues.
    pub degeneracy: Vec<bool>,
    /// `δ`, present for a single-vector reference.
    pub accuracy: Option<f64>,
    /// `δ_e`, present for a multi-vector reference.
    pub extended_accuracy: Option<f64>,
    pub reference: Option<String>,
    pub dominance_share: Option<f64>,
    pub characteristic_length: Option<f64>,
}

/// Eigen-analysis plus every measure that the inputs allow.
///
/// Refuses an accuracy evaluation when `λ_p` and `λ_{p+1}` coincide, since
/// the natural kinematics is then not unique.
pub fn assess(
    k: &StiffnessMatrix,
    w: &DofMetric,
    p: usize,
    reference: Option<&ReferenceKinematics>,
    load: Option<&DVector<f64>>,
    eigen_count: usize,
) -> Result<(AssessmentReport, ModalBasis)> {
    let basis = eig_sym(k, w)?;
    let sel = selectivity(&basis, p)?;

    let (mut accuracy, mut extended_accuracy) = (None, None);
    if let Some(r) = reference {
        if r.p() != p {
            return Err(Error::invalid(format!(
                "reference has {} vectors but pseudo-mobility is {p}",
                r.p()
            )));
        }
        if sel.degenerate {
            return Err(Error::Degenerate {
                first: p,
                second: p + 1,
            });
        }
        let phi_e = basis.leading(p);
        if p == 1 {
            accuracy = Some(extended_accuracy_index(&phi_e, r.vectors(), w)?);
        } else {
            extended_accuracy = Some(extended_accuracy_index(&phi_e, r.vectors(), w)?);
        }
    }
    let dominance = load.map(|f| dominance_share(&basis, f, p)).transpose()?;

    let m = eigen_count.min(basis.n());
    let lc = w.characteristic_length();
    let report = AssessmentReport {
        n_dof: basis.n(),
        eigenvalues: basis.eigenvalues()[..m].to_vec(),
        pseudo_mobility: p,
        selectivity: sel.value,
        selectivity_degenerate: sel.degenerate,
        degeneracy: basis.degeneracy_flags().into_iter().take(m.saturating_sub(1)).collect(),
        accuracy,
        extended_accuracy,
        reference: reference.map(|r| r.description().to_string()),
        dominance_share: dominance,
        characteristic_length: lc.is_finite().then_some(lc),
    };
    Ok((report, basis))
}
