//! Dense symmetric eigensolver and Rayleigh-quotient utilities.
//!
//! The generalized problem `k φ = λ W φ` with diagonal positive `W` is reduced
//! to the standard form `W^{-1/2} k W^{-1/2} y = λ y`, which is solved by
//! Householder tridiagonalization followed by implicit QL iteration with
//! Wilkinson shifts. Eigenvectors are mapped back as `φ = W^{-1/2} y`, which
//! makes them W-orthonormal.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dof::{check_len, DofMetric, StiffnessMatrix};
use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest one count as zero.
pub const ZERO_EIGENVALUE_RATIO: f64 = 1e-12;

/// Adjacent eigenvalues closer than this (relative to the larger) are coincident.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// Relative slack allowed when checking sampled quotients against `λ_1`.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-10;

/// Ascending eigenvalues and W-orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct ModalBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    metric: DofMetric,
}

impl ModalBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalue of mode `i` (0-based).
    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i]
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }

    /// The first `p` eigenvectors as columns.
    pub fn leading(&self, p: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, p).into_owned()
    }

    pub fn metric(&self) -> &DofMetric {
        &self.metric
    }

    /// Whether modes `i` and `i + 1` (0-based) are coincident.
    pub fn is_degenerate_pair(&self, i: usize) -> bool {
        coincident(self.eigenvalues[i], self.eigenvalues[i + 1])
    }

    /// One flag per adjacent pair `(i, i + 1)`.
    pub fn degeneracy_flags(&self) -> Vec<bool> {
        (0..self.n().saturating_sub(1))
            .map(|i| self.is_degenerate_pair(i))
            .collect()
    }

    /// Builds a basis from precomputed parts, checking ordering, positivity and
    /// W-orthonormality.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>, metric: DofMetric) -> Result<Self> {
        let n = metric.n();
        if eigenvalues.is_empty() || eigenvalues.len() != eigenvectors.ncols() || eigenvectors.nrows() != n {
            return Err(Error::invalid("modal basis dimensions do not agree"));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("eigenvalues are not ascending"));
        }
        if let Some(i) = eigenvalues.iter().position(|&l| !(l > 0.0)) {
            return Err(Error::ModelSingular {
                mode: i + 1,
                eigenvalue: eigenvalues[i],
                limit: 0.0,
                detail: String::new(),
            });
        }
        let g = metric.gram(&eigenvectors, &eigenvectors);
        let dev = (g - DMatrix::identity(eigenvalues.len(), eigenvalues.len())).amax();
        if dev > crate::dof::ORTHONORMAL_TOLERANCE {
            return Err(Error::invalid(format!(
                "eigenvectors are not metric-orthonormal (deviation {dev:e})"
            )));
        }
        Ok(ModalBasis {
            eigenvalues,
            eigenvectors,
            metric,
        })
    }
}

pub fn coincident(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEGENERACY_TOLERANCE * a.abs().max(b.abs())
}

/// `(uᵀ k u) / (uᵀ W u)`.
pub fn rayleigh_quotient(k: &StiffnessMatrix, w: &DofMetric, u: &DVector<f64>) -> Result<f64> {
    check_len("vector", u.len(), k.n())?;
    check_len("metric", w.n(), k.n())?;
    let den = w.inner(u, u);
    if !(den > 0.0) {
        return Err(Error::invalid("Rayleigh quotient of a zero vector"));
    }
    Ok(u.dot(&(k.as_matrix() * u)) / den)
}

/// Full spectrum of `k φ = λ W φ`, ascending, with W-orthonormal eigenvectors.
///
/// Sign convention: the largest-magnitude entry of each eigenvector is
/// positive, ties going to the lowest index. Fails with
/// [`Error::ModelSingular`] if any eigenvalue is at or below
/// `1e-12 · λ_max`.
pub fn eig_sym(k: &StiffnessMatrix, w: &DofMetric) -> Result<ModalBasis> {
    let n = k.n();
    check_len("metric", w.n(), n)?;
    let inv_sqrt: Vec<f64> = w.diag().iter().map(|&x| 1.0 / x.sqrt()).collect();
    let kk = k.as_matrix();
    let a = DMatrix::from_fn(n, n, |i, j| kk[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let (values, mut vectors) = symmetric_eigen(&a)?;

    for (i, s) in inv_sqrt.iter().enumerate() {
        vectors.row_mut(i).scale_mut(*s);
    }
    for mut col in vectors.column_iter_mut() {
        let max = col.amax();
        let lead = col.iter().position(|v| v.abs() >= max * (1.0 - 1e-10)).unwrap_or(0);
        if col[lead] < 0.0 {
            col.neg_mut();
        }
    }

    let lmax = values[n - 1];
    let limit = ZERO_EIGENVALUE_RATIO * lmax.abs();
    if let Some(i) = values.iter().position(|&l| l <= limit) {
        return Err(Error::ModelSingular {
            mode: i + 1,
            eigenvalue: values[i],
            limit,
            detail: String::new(),
        });
    }

    Ok(ModalBasis {
        eigenvalues: values,
        eigenvectors: vectors,
        metric: w.clone(),
    })
}

/// Eigen-decomposition of a symmetric matrix (lower triangle is not assumed;
/// the matrix is used as given). Returns ascending eigenvalues and orthonormal
/// eigenvectors as columns, without any sign normalization.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::invalid("eigenproblem needs a non-empty square matrix"));
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[r][order[c]]);
    Ok((values, vectors))
}

/// Householder reduction to tridiagonal form. On return `d` holds the
/// diagonal, `e[1..]` the subdiagonal and `v` the accumulated orthogonal
/// transformation.
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e[..i].iter_mut() {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iteration on the tridiagonal matrix `(d, e)`, accumulating
/// rotations into `v`.
fn tridiagonal_ql(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let max_iter = 30 * n.max(10);
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > f64::EPSILON * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::Factorization(format!(
                        "QL iteration did not converge for eigenvalue {}",
                        l + 1
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Monte-Carlo evidence that no direction has a Rayleigh quotient below `λ_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayleighCertificate {
    pub seed: u64,
    pub samples: usize,
    pub lambda1: f64,
    pub min_sampled: f64,
    pub max_sampled: f64,
    pub tolerance: f64,
    /// Number of samples with `R(u) < λ_1 − tolerance · λ_1`.
    pub violations: usize,
    pub holds: bool,
}

/// Evaluates the Rayleigh quotient on `samples` random directions drawn from a
/// seeded ChaCha8 stream and compares them against `λ_1` of `basis`.
pub fn min_rayleigh_certificate(
    k: &StiffnessMatrix,
    w: &DofMetric,
    basis: &ModalBasis,
    samples: usize,
    seed: u64,
) -> Result<RayleighCertificate> {
    if samples == 0 {
        return Err(Error::invalid("certificate needs at least one sample"));
    }
    check_len("modal basis", basis.n(), k.n())?;
    let n = k.n();
    let lambda1 = basis.eigenvalue(0);
    let floor = lambda1 - CERTIFICATE_TOLERANCE * lambda1.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_sampled = f64::INFINITY;
    let mut max_sampled = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut drawn = 0;
    while drawn < samples {
        let u = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let Ok(u) = w.normalize(&u) else { continue };
        let r = rayleigh_quotient(k, w, &u)?;
        min_sampled = min_sampled.min(r);
        max_sampled = max_sampled.max(r);
        if r < floor {
            violations += 1;
        }
        drawn += 1;
    }
    Ok(RayleighCertificate {
        seed,
        samples,
        lambda1,
        min_sampled,
        max_sampled,
        tolerance: CERTIFICATE_TOLERANCE,
        violations,
        holds: violations == 0,
    })
}
