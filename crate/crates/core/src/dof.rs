//! Degree-of-freedom bookkeeping, stiffness matrices and the DOF metric.
//!
//! Every vector and matrix in the crate is laid out over the *free* DOFs of a
//! [`DofMap`], in entry order. Translations are in mm, rotations in rad, forces
//! in N and moments in N·mm.
//!
//! Mixed translation/rotation vectors are not dimensionally homogeneous, so all
//! norms and inner products go through a diagonal [`DofMetric`] `W` with weight
//! 1 on translations and `L_c²` on rotations. With `W = I` everything reduces to
//! the plain Euclidean forms.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted (and then symmetrized away) on construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Tolerance for metric-orthonormality of reference and modal bases.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    TX,
    TY,
    TZ,
    RX,
    RY,
    RZ,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::TX,
        Direction::TY,
        Direction::TZ,
        Direction::RX,
        Direction::RY,
        Direction::RZ,
    ];

    /// Position of this direction in a 6-DOF nodal block.
    pub fn offset(self) -> usize {
        self as usize
    }

    pub fn kind(self) -> DofKind {
        if self.offset() < 3 {
            DofKind::Translation
        } else {
            DofKind::Rotation
        }
    }

    /// Out-of-plane components for a structure lying in the global XY plane.
    pub fn is_out_of_plane(self) -> bool {
        matches!(self, Direction::TZ | Direction::RX | Direction::RY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofKind {
    Translation,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DofEntry {
    pub node: NodeId,
    pub dir: Direction,
    pub kind: DofKind,
}

impl DofEntry {
    pub fn new(node: NodeId, dir: Direction) -> Self {
        DofEntry {
            node,
            dir,
            kind: dir.kind(),
        }
    }
}

/// Ordered list of scalar DOFs plus the subset removed from the analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    entries: Vec<DofEntry>,
    constrained: BTreeSet<usize>,
    free: Vec<usize>,
}

impl DofMap {
    pub fn new(entries: Vec<DofEntry>, constrained: impl IntoIterator<Item = usize>) -> Result<Self> {
        let constrained: BTreeSet<usize> = constrained.into_iter().collect();
        if let Some(&bad) = constrained.iter().find(|&&c| c >= entries.len()) {
            return Err(Error::invalid(format!(
                "constrained index {bad} out of range for {} DOF entries",
                entries.len()
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.kind != e.dir.kind() {
                return Err(Error::invalid(format!(
                    "DOF entry {i}: direction {:?} is not of kind {:?}",
                    e.dir, e.kind
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert((e.node, e.dir)) {
                return Err(Error::invalid(format!(
                    "DOF entry {i}: duplicate ({}, {:?})",
                    e.node, e.dir
                )));
            }
        }
        let free: Vec<usize> = (0..entries.len()).filter(|i| !constrained.contains(i)).collect();
        if free.is_empty() {
            return Err(Error::invalid("DOF map has no free DOFs"));
        }
        Ok(DofMap {
            entries,
            constrained,
            free,
        })
    }

    /// All six DOFs of each node, in node order, nothing constrained.
    pub fn full_nodal(nodes: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let entries = nodes
            .into_iter()
            .flat_map(|n| Direction::ALL.map(|d| DofEntry::new(n, d)))
            .collect();
        DofMap::new(entries, [])
    }

    pub fn entries(&self) -> &[DofEntry] {
        &self.entries
    }

    pub fn constrained(&self) -> &BTreeSet<usize> {
        &self.constrained
    }

    /// Entry indices of the free DOFs, ascending.
    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Free DOFs in analysis order.
    pub fn free_entries(&self) -> impl Iterator<Item = &DofEntry> + '_ {
        self.free.iter().map(move |&i| &self.entries[i])
    }

    /// Position of `(node, dir)` in a free-DOF vector, if it is free.
    pub fn free_position(&self, node: NodeId, dir: Direction) -> Option<usize> {
        self.free_entries().position(|e| e.node == node && e.dir == dir)
    }

    pub fn has_rotations(&self) -> bool {
        self.free_entries().any(|e| e.kind == DofKind::Rotation)
    }
}

/// Dense symmetric stiffness matrix on the free DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessMatrix {
    values: DMatrix<f64>,
}

impl StiffnessMatrix {
    /// Validates squareness and symmetry (to [`SYMMETRY_TOLERANCE`] relative to
    /// the largest entry), then stores the symmetric part.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (r, c) = values.shape();
        if r != c {
            return Err(Error::invalid(format!("stiffness matrix is {r}x{c}, not square")));
        }
        if r == 0 {
            return Err(Error::invalid("stiffness matrix is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("stiffness matrix has non-finite entries"));
        }
        let scale = values.amax();
        for i in 0..r {
            for j in 0..i {
                let d = (values[(i, j)] - values[(j, i)]).abs();
                if d > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::invalid(format!(
                        "stiffness matrix is not symmetric at ({}, {}): {} vs {}",
                        i + 1,
                        j + 1,
                        values[(i, j)],
                        values[(j, i)]
                    )));
                }
            }
        }
        let values = (&values + values.transpose()) * 0.5;
        Ok(StiffnessMatrix { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        StiffnessMatrix {
            values: &self.values * c,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("displacement", u.len(), self.n())?;
        Ok(&self.values * u)
    }
}

/// Diagonal weighting that makes mixed translation/rotation vectors
/// dimensionally homogeneous.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMetric {
    diag: DVector<f64>,
    characteristic_length: f64,
}

impl DofMetric {
    pub fn identity(n: usize) -> Self {
        DofMetric {
            diag: DVector::from_element(n, 1.0),
            characteristic_length: 1.0,
        }
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid(format!(
                "metric weight {i} is {}, must be positive",
                weights[i]
            )));
        }
        Ok(DofMetric {
            diag: DVector::from_vec(weights),
            characteristic_length: f64::NAN,
        })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &DVector<f64> {
        &self.diag
    }

    /// Length used for rotational weights; NaN for metrics built from raw weights.
    pub fn characteristic_length(&self) -> f64 {
        self.characteristic_length
    }

    pub fn is_identity(&self) -> bool {
        self.diag.iter().all(|&w| w == 1.0)
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        u.component_mul(&self.diag)
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.iter()
            .zip(v.iter())
            .zip(self.diag.iter())
            .map(|((a, b), w)| a * w * b)
            .sum()
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Scales `u` to unit metric norm.
    pub fn normalize(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("vector", u.len(), self.n())?;
        let nrm = self.norm(u);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        Ok(u / nrm)
    }

    /// `Aᵀ W B` for column blocks `A`, `B`.
    pub fn gram(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let wb = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| self.diag[i] * b[(i, j)]);
        a.transpose() * wb
    }
}

/// Metric for the free DOFs of `dof_map`: weight 1 on translations and
/// `characteristic_length²` (mm²) on rotations.
pub fn build_metric(dof_map: &DofMap, characteristic_length: f64) -> Result<DofMetric> {
    if !(characteristic_length.is_finite() && characteristic_length > 0.0) {
        return Err(Error::invalid(format!(
            "characteristic length must be positive, got {characteristic_length}"
        )));
    }
    let lc2 = characteristic_length * characteristic_length;
    let diag = dof_map
        .free_entries()
        .map(|e| match e.kind {
            DofKind::Translation => 1.0,
            DofKind::Rotation => lc2,
        })
        .collect::<Vec<_>>();
    Ok(DofMetric {
        diag: DVector::from_vec(diag),
        characteristic_length,
    })
}

/// `½ uᵀ k u` in N·mm.
pub fn strain_energy(k: &StiffnessMatrix, u: &DVector<f64>) -> Result<f64> {
    check_len("displacement", u.len(), k.n())?;
    Ok(0.5 * u.dot(&(k.as_matrix() * u)))
}

/// One or more metric-orthonormal displacement vectors describing a desired
/// motion.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceKinematics {
    vectors: DMatrix<f64>,
    description: String,
}

impl ReferenceKinematics {
    /// Metric-orthonormalizes `vectors` (modified Gram–Schmidt, two passes).
    /// Only the spanned subspace is kept, so any scaling or basis of the input
    /// is accepted; linearly dependent inputs are rejected.
    pub fn from_vectors(vectors: &[DVector<f64>], metric: &DofMetric, description: impl Into<String>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::invalid("reference kinematics needs at least one vector"));
        }
        let n = metric.n();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
        for (k, v) in vectors.iter().enumerate() {
            check_len("reference vector", v.len(), n)?;
            let original = metric.norm(v);
            if !(original > 0.0) {
                return Err(Error::invalid(format!("reference vector {} is zero", k + 1)));
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let c = metric.inner(b, &w);
                    w.axpy(-c, b, 1.0);
                }
            }
            let nrm = metric.norm(&w);
            if nrm <= 1e-10 * original {
                return Err(Error::invalid(format!(
                    "reference vector {} is linearly dependent on the previous ones",
                    k + 1
                )));
            }
            basis.push(w / nrm);
        }
        Ok(ReferenceKinematics {
            vectors: DMatrix::from_columns(&basis),
            description: description.into(),
        })
    }

    pub fn p(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::invalid(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}
