use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};

use super::beam::{global_element_stiffness, Section};
use super::Model;
use crate::dof::{build_metric, Direction, DofEntry, DofMap, DofMetric, NodeId, StiffnessMatrix};
use crate::eig::{symmetric_eigen, ZERO_EIGENVALUE_RATIO};
use crate::error::{Error, Result};
use crate::metrics::NodalReadout;

/// Sparse row of the full-to-free transformation: `u_full[g] = Σ c · u_free[j]`.
type TransformRow = Vec<(usize, f64)>;

/// Global stiffness on the free DOFs after rigid-link elimination and removal
/// of clamped DOFs.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub stiffness: StiffnessMatrix,
    /// Six entries per node in model order; clamped and slave DOFs constrained.
    pub dof_map: DofMap,
    pub metric: DofMetric,
    rows: Vec<TransformRow>,
}

impl Assembly {
    pub fn n_full(&self) -> usize {
        self.rows.len()
    }

    /// Full nodal displacement vector (6 per node, model order) of a free-DOF vector.
    pub fn expand(&self, u_free: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| r.iter().map(|&(j, c)| c * u_free[j]).sum()),
        )
    }

    /// Work-equivalent free-DOF load of a full nodal load vector.
    pub fn restrict(&self, f_full: &DVector<f64>) -> DVector<f64> {
        let mut f = DVector::zeros(self.stiffness.n());
        for (g, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                f[j] += c * f_full[g];
            }
        }
        f
    }

    fn node_rows(&self, node_index: usize) -> &[TransformRow] {
        &self.rows[6 * node_index..6 * node_index + 6]
    }
}

/// Assembles the free-DOF stiffness of `model`.
///
/// Slave DOFs are eliminated with the exact linearized rigid-body relation
/// `u_s = u_m + θ_m × (x_s − x_m)`, `θ_s = θ_m`; clamped DOFs are removed.
pub fn assemble(model: &Model) -> Result<Assembly> {
    model.validate()?;
    let index: HashMap<NodeId, usize> = model.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let clamped: HashSet<NodeId> = model.clamped_nodes.iter().copied().collect();
    let mut master_of: HashMap<NodeId, NodeId> = HashMap::new();
    for link in &model.rigid_links {
        for &s in &link.slaves {
            master_of.insert(s, link.master);
        }
    }

    let mut entries = Vec::with_capacity(6 * model.nodes.len());
    let mut constrained = Vec::new();
    for n in &model.nodes {
        for d in Direction::ALL {
            if clamped.contains(&n.id) || master_of.contains_key(&n.id) {
                constrained.push(entries.len());
            }
            entries.push(DofEntry::new(n.id, d));
        }
    }
    let dof_map =
        DofMap::new(entries, constrained).map_err(|e| Error::invalid(format!("model has no free DOFs: {e}")))?;
    let free_of: HashMap<usize, usize> = dof_map
        .free_indices()
        .iter()
        .enumerate()
        .map(|(j, &g)| (g, j))
        .collect();

    let mut rows: Vec<TransformRow> = vec![Vec::new(); dof_map.entries().len()];
    for (i, n) in model.nodes.iter().enumerate() {
        if clamped.contains(&n.id) {
            continue;
        }
        if let Some(&m) = master_of.get(&n.id) {
            let mi = index[&m];
            let mp = model.nodes[mi].pos();
            let r = [n.x - mp[0], n.y - mp[1], n.z - mp[2]];
            let f = |d: usize| free_of[&(6 * mi + d)];
            // translation = master translation + θ × r
            rows[6 * i] = vec![(f(0), 1.0), (f(4), r[2]), (f(5), -r[1])];
            rows[6 * i + 1] = vec![(f(1), 1.0), (f(5), r[0]), (f(3), -r[2])];
            rows[6 * i + 2] = vec![(f(2), 1.0), (f(3), r[1]), (f(4), -r[0])];
            for d in 3..6 {
                rows[6 * i + d] = vec![(f(d), 1.0)];
            }
            for row in &mut rows[6 * i..6 * i + 6] {
                row.retain(|&(_, c)| c != 0.0);
            }
        } else {
            for d in 0..6 {
                rows[6 * i + d] = vec![(free_of[&(6 * i + d)], 1.0)];
            }
        }
    }

    let n = dof_map.n_free();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for e in &model.elements {
        let (i1, i2) = (index[&e.n1], index[&e.n2]);
        let ke = global_element_stiffness(
            Section::new(e.b, e.h)?,
            &model.material,
            model.nodes[i1].pos(),
            model.nodes[i2].pos(),
        )?;
        let g = |a: usize| if a < 6 { 6 * i1 + a } else { 6 * i2 + a - 6 };
        for a in 0..12 {
            for &(p, ca) in &rows[g(a)] {
                for b in 0..12 {
                    let kab = ke[(a, b)];
                    if kab == 0.0 {
                        continue;
                    }
                    for &(q, cb) in &rows[g(b)] {
                        k[(p, q)] += ca * kab * cb;
                    }
                }
            }
        }
    }
    let stiffness = StiffnessMatrix::new(k)?;
    check_positive_definite(&stiffness, &dof_map)?;
    let metric = build_metric(&dof_map, model.characteristic_length)?;
    Ok(Assembly {
        stiffness,
        dof_map,
        metric,
        rows,
    })
}

fn check_positive_definite(k: &StiffnessMatrix, dof_map: &DofMap) -> Result<()> {
    if k.as_matrix().clone().cholesky().is_some() {
        return Ok(());
    }
    let (vals, vecs) = symmetric_eigen(k.as_matrix())?;
    let limit = ZERO_EIGENVALUE_RATIO * vals.last().copied().unwrap_or(0.0).abs();
    let i = vals.iter().position(|&l| l <= limit).unwrap_or(0);
    let col = vecs.column(i);
    let dominant = col.iamax();
    let e = dof_map.free_entries().nth(dominant).expect("free entry");
    Err(Error::ModelSingular {
        mode: i + 1,
        eigenvalue: vals[i],
        limit,
        detail: format!(": zero-energy mode dominated by node {} {:?}", e.node, e.dir),
    })
}

/// Strain energy `½ u_eᵀ k_e u_e` of every element for a full nodal vector.
pub fn element_energy(model: &Model, u_full: &DVector<f64>) -> Result<Vec<f64>> {
    model
        .elements
        .iter()
        .map(|e| {
            let i1 = model.node_index(e.n1).ok_or_else(|| Error::invalid("unknown node"))?;
            let i2 = model.node_index(e.n2).ok_or_else(|| Error::invalid("unknown node"))?;
            let ke = global_element_stiffness(
                Section::new(e.b, e.h)?,
                &model.material,
                model.nodes[i1].pos(),
                model.nodes[i2].pos(),
            )?;
            let ue = nalgebra::SVector::<f64, 12>::from_fn(|a, _| {
                if a < 6 {
                    u_full[6 * i1 + a]
                } else {
                    u_full[6 * i2 + a - 6]
                }
            });
            Ok(0.5 * ue.dot(&(ke * ue)))
        })
        .collect()
}

/// A model together with the space in which it is assessed.
///
/// Models with rigid links are statically condensed onto the DOFs of the link
/// masters, so the eigenproblem is posed on the link-to-link stiffness of the
/// mechanism and does not depend on how finely the flexible parts are meshed.
/// Models without rigid links are assessed on all free DOFs.
#[derive(Debug, Clone)]
pub struct Analysis {
    model: Model,
    assembly: Assembly,
    stiffness: StiffnessMatrix,
    dof_map: DofMap,
    metric: DofMetric,
    /// free × n map from analysis DOFs to free DOFs; `None` means identity.
    recovery: Option<DMatrix<f64>>,
}

impl Analysis {
    pub fn new(model: Model) -> Result<Self> {
        let retain: HashSet<NodeId> = model.rigid_links.iter().map(|l| l.master).collect();
        if retain.is_empty() {
            Self::full_space(model)
        } else {
            Self::condensed(model, &retain)
        }
    }

    /// Analysis on all free DOFs, without condensation.
    pub fn full_space(model: Model) -> Result<Self> {
        let assembly = assemble(&model)?;
        Ok(Analysis {
            stiffness: assembly.stiffness.clone(),
            dof_map: assembly.dof_map.clone(),
            metric: assembly.metric.clone(),
            model,
            assembly,
            recovery: None,
        })
    }

    fn condensed(model: Model, retain: &HashSet<NodeId>) -> Result<Self> {
        let assembly = assemble(&model)?;
        let free: Vec<DofEntry> = assembly.dof_map.free_entries().copied().collect();
        let (kept, other): (Vec<usize>, Vec<usize>) = (0..free.len()).partition(|&i| retain.contains(&free[i].node));
        if other.is_empty() {
            return Self::full_space(model);
        }
        let k = assembly.stiffness.as_matrix();
        let sub =
            |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| k[(rows[i], cols[j])]);
        let k_rr = sub(&kept, &kept);
        let k_or = sub(&other, &kept);
        let k_oo = sub(&other, &other);
        let chol = k_oo
            .cholesky()
            .ok_or_else(|| Error::Factorization("interior stiffness is not positive definite".into()))?;
        let x = chol.solve(&k_or);
        let k_c = k_rr - k_or.tr_mul(&x);

        let mut recovery = DMatrix::zeros(free.len(), kept.len());
        for (c, &r) in kept.iter().enumerate() {
            recovery[(r, c)] = 1.0;
        }
        for (i, &r) in other.iter().enumerate() {
            for c in 0..kept.len() {
                recovery[(r, c)] = -x[(i, c)];
            }
        }

        let dof_map = DofMap::new(kept.iter().map(|&i| free[i]).collect(), [])?;
        let metric = build_metric(&dof_map, model.characteristic_length)?;
        Ok(Analysis {
            stiffness: StiffnessMatrix::new(k_c)?,
            dof_map,
            metric,
            model,
            assembly,
            recovery: Some(recovery),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn assembly(&self) -> &Assembly {
        &self.assembly
    }

    pub fn stiffness(&self) -> &StiffnessMatrix {
        &self.stiffness
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.dof_map
    }

    pub fn metric(&self) -> &DofMetric {
        &self.metric
    }

    pub fn is_condensed(&self) -> bool {
        self.recovery.is_some()
    }

    pub fn n(&self) -> usize {
        self.stiffness.n()
    }

    /// Free-DOF vector of an analysis-space vector. For condensed models the
    /// interior follows with minimum strain energy.
    pub fn to_free(&self, u: &DVector<f64>) -> DVector<f64> {
        match &self.recovery {
            Some(r) => r * u,
            None => u.clone(),
        }
    }

    /// Displacements of every node, 6 per node in model order.
    pub fn expand(&self, u: &DVector<f64>) -> DVector<f64> {
        self.assembly.expand(&self.to_free(u))
    }

    /// `[ux, uy, uz, θx, θy, θz]` of one node.
    pub fn nodal(&self, u: &DVector<f64>, node: NodeId) -> Result<[f64; 6]> {
        crate::dof::check_len("vector", u.len(), self.n())?;
        let i = self
            .model
            .node_index(node)
            .ok_or_else(|| Error::invalid(format!("unknown node {node}")))?;
        let free = self.to_free(u);
        let rows = self.assembly.node_rows(i);
        Ok(std::array::from_fn(|d| rows[d].iter().map(|&(j, c)| c * free[j]).sum()))
    }

    /// Analysis-space load for nodal forces and moments `[Fx, Fy, Fz, Mx, My, Mz]`.
    pub fn load_vector(&self, loads: &[(NodeId, [f64; 6])]) -> Result<DVector<f64>> {
        let mut f_full = DVector::zeros(self.assembly.n_full());
        for (node, f) in loads {
            let i = self
                .model
                .node_index(*node)
                .ok_or_else(|| Error::invalid(format!("load on unknown node {node}")))?;
            for d in 0..6 {
                f_full[6 * i + d] += f[d];
            }
        }
        let f_free = self.assembly.restrict(&f_full);
        Ok(match &self.recovery {
            Some(r) => r.tr_mul(&f_free),
            None => f_free,
        })
    }
}

impl NodalReadout for Analysis {
    fn translation(&self, u: &DVector<f64>, node: NodeId) -> Result<[f64; 3]> {
        let d = self.nodal(u, node)?;
        Ok([d[0], d[1], d[2]])
    }

    fn position(&self, node: NodeId) -> Option<[f64; 3]> {
        self.model.position(node)
    }
}
