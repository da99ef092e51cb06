//! Two-node spatial Euler–Bernoulli beam with a rectangular `b × h` section.
//!
//! Local DOF order per node: `[u, v, w, θx, θy, θz]`. The section height `h`
//! lies along local y (in-plane bending about z uses `I_z = b h³/12`), the
//! width `b` along local z (`I_y = h b³/12`).

use nalgebra::{Matrix3, SMatrix, Vector3};

use super::Material;
use crate::error::{Error, Result};

pub type Mat12 = SMatrix<f64, 12, 12>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: f64,
    pub h: f64,
}

impl Section {
    pub fn new(b: f64, h: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0 && h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("degenerate section b = {b}, h = {h}")));
        }
        Ok(Section { b, h })
    }

    pub fn area(&self) -> f64 {
        self.b * self.h
    }

    /// Second moment for in-plane bending (about local z).
    pub fn i_z(&self) -> f64 {
        self.b * self.h.powi(3) / 12.0
    }

    /// Second moment for out-of-plane bending (about local y).
    pub fn i_y(&self) -> f64 {
        self.h * self.b.powi(3) / 12.0
    }

    /// Saint-Venant torsion constant, series approximation for a rectangle
    /// with long side `a` and short side `c`.
    pub fn torsion_constant(&self) -> f64 {
        let (a, c) = if self.b >= self.h {
            (self.b, self.h)
        } else {
            (self.h, self.b)
        };
        a * c.powi(3) * (1.0 / 3.0 - 0.21 * (c / a) * (1.0 - c.powi(4) / (12.0 * a.powi(4))))
    }
}

/// Local 12×12 stiffness of a straight beam of the given length.
pub fn beam_element_stiffness(section: Section, material: &Material, length: f64) -> Result<Mat12> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::invalid(format!("beam length must be positive, got {length}")));
    }
    let e = material.e;
    let g = material.shear_modulus();
    let l = length;
    let ea = e * section.area() / l;
    let gj = g * section.torsion_constant() / l;
    let eiz = e * section.i_z();
    let eiy = e * section.i_y();

    let mut k = Mat12::zeros();
    let mut set = |i: usize, j: usize, v: f64| {
        k[(i, j)] = v;
        k[(j, i)] = v;
    };

    set(0, 0, ea);
    set(0, 6, -ea);
    set(6, 6, ea);

    set(3, 3, gj);
    set(3, 9, -gj);
    set(9, 9, gj);

    // v, θz
    let (a, b, c, d) = (
        12.0 * eiz / l.powi(3),
        6.0 * eiz / l.powi(2),
        4.0 * eiz / l,
        2.0 * eiz / l,
    );
    set(1, 1, a);
    set(1, 5, b);
    set(1, 7, -a);
    set(1, 11, b);
    set(5, 5, c);
    set(5, 7, -b);
    set(5, 11, d);
    set(7, 7, a);
    set(7, 11, -b);
    set(11, 11, c);

    // w, θy
    let (a, b, c, d) = (
        12.0 * eiy / l.powi(3),
        6.0 * eiy / l.powi(2),
        4.0 * eiy / l,
        2.0 * eiy / l,
    );
    set(2, 2, a);
    set(2, 4, -b);
    set(2, 8, -a);
    set(2, 10, -b);
    set(4, 4, c);
    set(4, 8, b);
    set(4, 10, d);
    set(8, 8, a);
    set(8, 10, b);
    set(10, 10, c);

    Ok(k)
}

/// Rows are the local axes expressed in global coordinates. Local y is
/// `ẑ × x̂` (in the global XY plane) unless the beam is parallel to Z.
pub fn local_axes(p1: [f64; 3], p2: [f64; 3]) -> Result<Matrix3<f64>> {
    let d = Vector3::new(p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2]);
    let len = d.norm();
    if !(len > 0.0) {
        return Err(Error::invalid("beam element has zero length"));
    }
    let x = d / len;
    let yz = Vector3::z().cross(&x);
    let y = if yz.norm() > 1e-9 {
        yz.normalize()
    } else {
        let t = Vector3::y();
        (t - x * x.dot(&t)).normalize()
    };
    let z = x.cross(&y);
    Ok(Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]))
}

/// Global 12×12 stiffness of the beam between `p1` and `p2`.
pub fn global_element_stiffness(section: Section, material: &Material, p1: [f64; 3], p2: [f64; 3]) -> Result<Mat12> {
    let length = ((p2[0] - p1[0]).powi(2) + (p2[1] - p1[1]).powi(2) + (p2[2] - p1[2]).powi(2)).sqrt();
    let kl = beam_element_stiffness(section, material, length)?;
    let lam = local_axes(p1, p2)?;
    let mut t = Mat12::zeros();
    for blk in 0..4 {
        t.fixed_view_mut::<3, 3>(3 * blk, 3 * blk).copy_from(&lam);
    }
    let kg = t.transpose() * kl * t;
    Ok((kg + kg.transpose()) * 0.5)
}
