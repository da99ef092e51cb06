use serde::{Deserialize, Serialize};

use super::{Element, Material, Model, Node, RigidLink};
use crate::dof::NodeId;
use crate::error::{Error, Result};

/// Circular notch hinge: a block of in-plane height `l + 2R` with two
/// opposite circular notches of radius `R`, leaving a web of thickness `l`.
/// All lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NotchHingeParams {
    pub radius: f64,
    pub thickness: f64,
    pub width: f64,
    pub link_length: f64,
    pub n_notch: usize,
    pub material: Material,
}

impl Default for NotchHingeParams {
    fn default() -> Self {
        NotchHingeParams {
            radius: 5.0,
            thickness: 0.5,
            width: 10.0,
            link_length: 30.0,
            n_notch: 40,
            material: Material::default(),
        }
    }
}

impl NotchHingeParams {
    pub fn with_thickness(self, thickness: f64) -> Self {
        NotchHingeParams { thickness, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.radius, "notch radius R")?;
        positive(self.thickness, "web thickness l")?;
        positive(self.width, "width b")?;
        positive(self.link_length, "link length")?;
        if self.n_notch < 8 {
            return Err(Error::invalid(format!(
                "n_notch must be at least 8, got {}",
                self.n_notch
            )));
        }
        if self.radius < self.thickness / 10.0 {
            return Err(Error::invalid(format!(
                "R >= l/10 violated: R = {}, l = {}",
                self.radius, self.thickness
            )));
        }
        Ok(())
    }

    /// Total in-plane height of the hinge block.
    pub fn block_height(&self) -> f64 {
        self.thickness + 2.0 * self.radius
    }
}

/// In-plane height of the notch web at abscissa `x ∈ [−R, R]`.
pub fn notch_height(radius: f64, thickness: f64, x: f64) -> f64 {
    let x = x.clamp(-radius, radius);
    thickness + 2.0 * (radius - (radius * radius - x * x).sqrt())
}

/// Beam model of the notch hinge along the global X axis, notch centre at the
/// origin.
///
/// Stations follow `x = R · sgn(s) (1 − cos(π|s|/2))` for `s` uniform in
/// `[−1, 1]`, which clusters elements at the thin web; each element takes the
/// height at its midpoint. Node 1 (x = −R) is clamped; the moving link is a
/// rigid block of length `link_length` mastered by the node at x = R.
pub fn mesh_notch_hinge(params: &NotchHingeParams) -> Result<Model> {
    params.validate()?;
    let r = params.radius;
    let n = params.n_notch;
    let mut stations: Vec<f64> = (0..=n)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / n as f64;
            r * s.signum() * (1.0 - (std::f64::consts::FRAC_PI_2 * s.abs()).cos())
        })
        .map(|x| if x.abs() < 1e-15 { 0.0 } else { x })
        .collect();
    stations[0] = -r;
    stations[n] = r;

    let mut nodes: Vec<Node> = stations
        .iter()
        .enumerate()
        .map(|(i, &x)| Node::new(i as u32 + 1, x, 0.0))
        .collect();
    let elements = stations
        .windows(2)
        .enumerate()
        .map(|(i, w)| Element {
            n1: NodeId(i as u32 + 1),
            n2: NodeId(i as u32 + 2),
            b: params.width,
            h: notch_height(r, params.thickness, 0.5 * (w[0] + w[1])),
        })
        .collect();

    let master = NodeId(n as u32 + 1);
    let half = params.block_height() / 2.0;
    let ll = params.link_length;
    let link_points = [
        (r + ll / 2.0, 0.0),
        (r + ll, 0.0),
        (r, half),
        (r, -half),
        (r + ll, half),
        (r + ll, -half),
    ];
    let mut slaves = Vec::new();
    for (k, (x, y)) in link_points.iter().enumerate() {
        let id = n as u32 + 2 + k as u32;
        nodes.push(Node::new(id, *x, *y));
        slaves.push(NodeId(id));
    }
    let mut moving_nodes = vec![master];
    moving_nodes.extend(&slaves);

    Ok(Model {
        nodes,
        elements,
        material: params.material,
        clamped_nodes: vec![NodeId(1)],
        rigid_links: vec![RigidLink { master, slaves }],
        moving_nodes,
        characteristic_length: r,
    })
}

/// Compliant parallel guide: two parallel leaf springs along +Y, clamped at
/// y = 0 and joined at the top by a rigid link. All lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuideParams {
    pub leaf_length: f64,
    pub leaf_thickness: f64,
    pub width: f64,
    pub link_span: f64,
    pub n_per_leaf: usize,
    pub material: Material,
}

impl Default for GuideParams {
    fn default() -> Self {
        GuideParams {
            leaf_length: 40.0,
            leaf_thickness: 0.5,
            width: 10.0,
            link_span: 30.0,
            n_per_leaf: 10,
            material: Material::default(),
        }
    }
}

impl GuideParams {
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        for (v, name) in [
            (self.leaf_length, "leaf length"),
            (self.leaf_thickness, "leaf thickness"),
            (self.width, "width"),
            (self.link_span, "link span"),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_per_leaf == 0 {
            return Err(Error::invalid("n_per_leaf must be at least 1"));
        }
        Ok(())
    }
}

/// Beam model of the parallel guide. Leaf A sits at x = 0, leaf B at
/// x = `link_span`; the top of leaf A masters the rigid link, whose slaves are
/// the top of leaf B and two points above the leaves.
pub fn mesh_parallel_guide(params: &GuideParams) -> Result<Model> {
    params.validate()?;
    let n = params.n_per_leaf;
    let (len, span) = (params.leaf_length, params.link_span);
    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    for (leaf, x) in [0.0, span].into_iter().enumerate() {
        let base = (leaf * (n + 1)) as u32;
        for i in 0..=n {
            nodes.push(Node::new(base + i as u32 + 1, x, len * i as f64 / n as f64));
        }
        for i in 0..n {
            elements.push(Element {
                n1: NodeId(base + i as u32 + 1),
                n2: NodeId(base + i as u32 + 2),
                b: params.width,
                h: params.leaf_thickness,
            });
        }
    }
    let top_a = NodeId(n as u32 + 1);
    let top_b = NodeId(2 * n as u32 + 2);
    let extra = [NodeId(2 * n as u32 + 3), NodeId(2 * n as u32 + 4)];
    nodes.push(Node::new(extra[0].0, 0.0, len + span / 2.0));
    nodes.push(Node::new(extra[1].0, span, len + span / 2.0));

    let slaves = vec![top_b, extra[0], extra[1]];
    let mut moving_nodes = vec![top_a];
    moving_nodes.extend(&slaves);
    Ok(Model {
        nodes,
        elements,
        material: params.material,
        clamped_nodes: vec![NodeId(1), NodeId(n as u32 + 2)],
        rigid_links: vec![RigidLink { master: top_a, slaves }],
        moving_nodes,
        characteristic_length: len,
    })
}
