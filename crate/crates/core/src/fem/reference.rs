use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::Analysis;
use crate::dof::{NodeId, ReferenceKinematics};
use crate::error::{Error, Result};

/// Linearized rigid motion of the moving link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RigidMotion {
    /// Unit rotation about `axis` through `pivot` (mm).
    Rotation { pivot: [f64; 3], axis: [f64; 3] },
    /// Unit translation along `direction`.
    Translation { direction: [f64; 3] },
}

impl RigidMotion {
    fn normalized(self) -> Result<Self> {
        let unit = |v: [f64; 3], what: &str| -> Result<[f64; 3]> {
            let v = Vector3::from(v);
            let n = v.norm();
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::invalid(format!("{what} must be a finite non-zero vector")));
            }
            Ok((v / n).into())
        };
        Ok(match self {
            RigidMotion::Rotation { pivot, axis } => {
                if !pivot.iter().all(|c| c.is_finite()) {
                    return Err(Error::invalid("rotation pivot must be finite"));
                }
                RigidMotion::Rotation {
                    pivot,
                    axis: unit(axis, "rotation axis")?,
                }
            }
            RigidMotion::Translation { direction } => RigidMotion::Translation {
                direction: unit(direction, "translation direction")?,
            },
        })
    }

    /// `[ux, uy, uz, θx, θy, θz]` at position `p`.
    pub fn at(&self, p: [f64; 3]) -> [f64; 6] {
        match *self {
            RigidMotion::Rotation { pivot, axis } => {
                let a = Vector3::from(axis);
                let t = a.cross(&(Vector3::from(p) - Vector3::from(pivot)));
                [t[0], t[1], t[2], a[0], a[1], a[2]]
            }
            RigidMotion::Translation { direction: d } => [d[0], d[1], d[2], 0.0, 0.0, 0.0],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RigidMotion::Rotation { pivot, axis } => format!(
                "rotation about ({}, {}, {}) through ({}, {}, {})",
                axis[0], axis[1], axis[2], pivot[0], pivot[1], pivot[2]
            ),
            RigidMotion::Translation { direction: d } => {
                format!("translation along ({}, {}, {})", d[0], d[1], d[2])
            }
        }
    }
}

/// How DOFs outside the moving link are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completion {
    ZeroFill,
    /// Statically condensed: minimum strain energy with the moving link held.
    #[default]
    MinEnergy,
}

/// Reference kinematics in the analysis space of `analysis`: DOFs of moving
/// nodes follow `motion`, all others are completed per `completion`.
pub fn rigid_reference(
    analysis: &Analysis,
    motion: RigidMotion,
    completion: Completion,
) -> Result<ReferenceKinematics> {
    let motion = motion.normalized()?;
    let model = analysis.model();
    if model.moving_nodes.is_empty() {
        return Err(Error::invalid("model has no moving nodes"));
    }
    let moving: HashSet<NodeId> = model.moving_nodes.iter().copied().collect();
    let n = analysis.n();
    let mut u = DVector::zeros(n);
    let mut held = Vec::new();
    let mut rest = Vec::new();
    for (i, e) in analysis.dof_map().free_entries().enumerate() {
        if moving.contains(&e.node) {
            let p = model.position(e.node).expect("validated model");
            u[i] = motion.at(p)[e.dir.offset()];
            held.push(i);
        } else {
            rest.push(i);
        }
    }
    if u.amax() == 0.0 {
        return Err(Error::invalid(format!(
            "{} is annihilated by the constraints",
            motion.describe()
        )));
    }
    if completion == Completion::MinEnergy && !rest.is_empty() {
        let k = analysis.stiffness().as_matrix();
        let k_oo = DMatrix::from_fn(rest.len(), rest.len(), |i, j| k[(rest[i], rest[j])]);
        let rhs = DVector::from_fn(rest.len(), |i, _| {
            -held.iter().map(|&m| k[(rest[i], m)] * u[m]).sum::<f64>()
        });
        let chol = k_oo
            .cholesky()
            .ok_or_else(|| Error::Factorization("stiffness outside the moving link is not positive definite".into()))?;
        let sol = chol.solve(&rhs);
        for (i, &r) in rest.iter().enumerate() {
            u[r] = sol[i];
        }
    }
    let label = match completion {
        Completion::ZeroFill => "zero fill",
        Completion::MinEnergy => "min energy",
    };
    ReferenceKinematics::from_vectors(&[u], analysis.metric(), format!("{} ({label})", motion.describe()))
}
