//! Beam finite-element models of flexure hinges and compliant guides.

mod assembly;
pub mod beam;
mod mesh;
mod reference;
mod sweep;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dof::NodeId;
use crate::error::{Error, Result};

pub use assembly::{assemble, element_energy, Analysis, Assembly};
pub use mesh::{mesh_notch_hinge, mesh_parallel_guide, notch_height, GuideParams, NotchHingeParams};
pub use reference::{rigid_reference, Completion, RigidMotion};
pub use sweep::{sweep_thickness, SweepRow, SweepValues};

/// Linear elastic isotropic material (MPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
}

impl Material {
    pub fn new(e: f64, nu: f64) -> Result<Self> {
        let m = Material { e, nu };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e.is_finite() && self.e > 0.0) {
            return Err(Error::invalid(format!(
                "Young's modulus must be positive, got {}",
                self.e
            )));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(Error::invalid(format!(
                "Poisson ratio must lie in (-1, 0.5), got {}",
                self.nu
            )));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }
}

impl Default for Material {
    /// Steel, E = 200 GPa, ν = 0.3.
    fn default() -> Self {
        Material { e: 200_000.0, nu: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

impl Node {
    pub fn new(id: u32, x: f64, y: f64) -> Self {
        Node {
            id: NodeId(id),
            x,
            y,
            z: 0.0,
        }
    }

    pub fn pos(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub n1: NodeId,
    pub n2: NodeId,
    /// Out-of-plane width (mm).
    pub b: f64,
    /// In-plane height (mm).
    pub h: f64,
}

/// Slaves follow the master node as a rigid body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidLink {
    pub master: NodeId,
    pub slaves: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub nodes: Vec<Node>,
    pub elements: Vec<Element>,
    pub material: Material,
    pub clamped_nodes: Vec<NodeId>,
    #[serde(default)]
    pub rigid_links: Vec<RigidLink>,
    #[serde(default)]
    pub moving_nodes: Vec<NodeId>,
    /// Length (mm) weighting rotational DOFs in the metric.
    pub characteristic_length: f64,
}

impl Model {
    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn position(&self, id: NodeId) -> Option<[f64; 3]> {
        self.nodes.iter().find(|n| n.id == id).map(Node::pos)
    }

    /// Checks references, geometry and connectivity.
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.nodes.is_empty() {
            return Err(Error::invalid("model has no nodes"));
        }
        if !(self.characteristic_length.is_finite() && self.characteristic_length > 0.0) {
            return Err(Error::invalid(format!(
                "characteristic_length must be positive, got {}",
                self.characteristic_length
            )));
        }
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(Error::invalid(format!("duplicate node id {}", n.id)));
            }
            if !(n.x.is_finite() && n.y.is_finite() && n.z.is_finite()) {
                return Err(Error::invalid(format!("node {} has non-finite coordinates", n.id)));
            }
        }
        let known = |id: NodeId, what: &str| -> Result<()> {
            if ids.contains(&id) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} refers to unknown node {id}")))
            }
        };
        for (i, e) in self.elements.iter().enumerate() {
            known(e.n1, &format!("element {i}"))?;
            known(e.n2, &format!("element {i}"))?;
            if e.n1 == e.n2 {
                return Err(Error::invalid(format!("element {i} connects node {} to itself", e.n1)));
            }
            beam::Section::new(e.b, e.h).map_err(|err| Error::invalid(format!("element {i}: {err}")))?;
            let (p1, p2) = (self.position(e.n1).unwrap(), self.position(e.n2).unwrap());
            beam::local_axes(p1, p2).map_err(|err| Error::invalid(format!("element {i}: {err}")))?;
        }
        let clamped: HashSet<NodeId> = self.clamped_nodes.iter().copied().collect();
        for &c in &self.clamped_nodes {
            known(c, "clamped_nodes")?;
        }
        if clamped.is_empty() {
            return Err(Error::invalid("model has no clamped node"));
        }
        let mut slaves = HashSet::new();
        let masters: HashSet<NodeId> = self.rigid_links.iter().map(|l| l.master).collect();
        for (i, link) in self.rigid_links.iter().enumerate() {
            known(link.master, &format!("rigid link {i}"))?;
            if clamped.contains(&link.master) {
                return Err(Error::invalid(format!(
                    "rigid link {i}: master {} is clamped",
                    link.master
                )));
            }
            for &s in &link.slaves {
                known(s, &format!("rigid link {i}"))?;
                if s == link.master || masters.contains(&s) {
                    return Err(Error::invalid(format!("rigid link {i}: node {s} is also a master")));
                }
                if clamped.contains(&s) {
                    return Err(Error::invalid(format!("rigid link {i}: slave {s} is clamped")));
                }
                if !slaves.insert(s) {
                    return Err(Error::invalid(format!(
                        "node {s} is a slave of more than one rigid link"
                    )));
                }
            }
        }
        for &m in &self.moving_nodes {
            known(m, "moving_nodes")?;
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let index: HashMap<NodeId, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        let mut edge = |a: NodeId, b: NodeId| {
            let (i, j) = (index[&a], index[&b]);
            adj[i].push(j);
            adj[j].push(i);
        };
        for e in &self.elements {
            edge(e.n1, e.n2);
        }
        for l in &self.rigid_links {
            for &s in &l.slaves {
                edge(l.master, s);
            }
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!(
                "node {} is not connected to node {}",
                self.nodes[i].id, self.nodes[0].id
            )));
        }
        Ok(())
    }
}
