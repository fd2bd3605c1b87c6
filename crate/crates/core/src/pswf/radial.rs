//! Radial part of the disk prolate spheroidal wave functions.
//!
//! With `eta = 2r^2 - 1` the radial factor is `r^m phi(eta)` and `phi` is
//! expanded in the normalized Jacobi polynomials `P_j^{(m)}`. Multiplication
//! by `c^2 r^2 = (c^2/2)(1 + eta)` couples neighbouring polynomials through
//! the three-term recurrence, so the Sturm-Liouville operator becomes a
//! symmetric tridiagonal matrix.

use super::PswfIndex;
use crate::numerics::jacobi::fill_jacobi;
use crate::numerics::tridiag::refine_eigenvector;
use crate::numerics::{jacobi_recurrence_coefficients, tridiagonal_eigen};
use crate::{Error, Result, TridiagonalSymmetric};
use std::f64::consts::PI;

/// Largest tolerated `|beta_{j_max}| / max |beta_j|`.
pub const TAIL_TOLERANCE: f64 = 1e-13;

/// Jacobi expansion coefficients of `phi_{m,n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCoefficients {
    pub m: usize,
    pub n: usize,
    /// `beta_0 ..= beta_{j_max}`.
    pub beta: Vec<f64>,
}

impl RadialCoefficients {
    pub fn j_max(&self) -> usize {
        self.beta.len() - 1
    }

    /// `phi_{m,n}(eta)`.
    pub fn phi(&self, eta: f64) -> f64 {
        let mut p = Vec::with_capacity(self.beta.len());
        fill_jacobi(self.m, eta, self.beta.len(), &mut p);
        dot(&self.beta, &p)
    }

    /// `r^m phi_{m,n}(2r^2 - 1)`.
    pub fn radial(&self, r: f64) -> f64 {
        r.powi(self.m as i32) * self.phi(2.0 * r * r - 1.0)
    }

    /// `|beta_{j_max}| / max |beta_j|`.
    pub fn tail_ratio(&self) -> f64 {
        let max = self.beta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        self.beta[self.j_max()].abs() / max
    }
}

/// A Sturm-Liouville eigenpair for one `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMode {
    pub chi: f64,
    pub coeffs: RadialCoefficients,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Default highest Jacobi degree for radial orders up to `n_max`.
pub fn default_truncation(c: f64, n_max: usize) -> usize {
    2 * n_max + c.ceil() as usize + 30
}

/// Matrix of the Sturm-Liouville operator on `P_0^{(m)} .. P_{n_trunc-1}^{(m)}`.
pub fn build_sturm_liouville_matrix(m: usize, c: f64, n_trunc: usize) -> TridiagonalSymmetric {
    let half_c2 = 0.5 * c * c;
    let mut diagonal = Vec::with_capacity(n_trunc);
    let mut offdiagonal = Vec::with_capacity(n_trunc.saturating_sub(1));
    for j in 0..n_trunc {
        let (a, b) = jacobi_recurrence_coefficients::<f64>(m, j);
        let deg = (2 * j + m) as f64;
        diagonal.push(deg * (deg + 2.0) + half_c2 * (1.0 + b));
        if j + 1 < n_trunc {
            offdiagonal.push(half_c2 * a);
        }
    }
    TridiagonalSymmetric { diagonal, offdiagonal }
}

/// Eigenpairs `n = 0 ..= n_max` with the default truncation.
pub fn compute_radial_eigens(m: usize, c: f64, n_max: usize) -> Result<Vec<RadialMode>> {
    compute_radial_eigens_with_truncation(m, c, n_max, default_truncation(c, n_max))
}

/// Eigenpairs `n = 0 ..= n_max` expanded up to Jacobi degree `j_max`.
///
/// Each eigenvector gets one inverse-iteration step so that its decaying
/// tail is accurate relative to itself, and is signed so that `phi(1) > 0`.
pub fn compute_radial_eigens_with_truncation(
    m: usize,
    c: f64,
    n_max: usize,
    j_max: usize,
) -> Result<Vec<RadialMode>> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("bandwidth must be positive, got {c}")));
    }
    if j_max < n_max + 1 {
        return Err(Error::invalid(format!("truncation {j_max} cannot resolve n_max = {n_max}")));
    }
    let t = build_sturm_liouville_matrix(m, c, j_max + 1);
    let eig = tridiagonal_eigen(&t);
    let mut at_one = Vec::with_capacity(j_max + 1);
    fill_jacobi(m, 1.0, j_max + 1, &mut at_one);

    let mut modes = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let chi = eig.values[n];
        let mut beta = refine_eigenvector(&t, chi, &eig.vectors[n]);
        if dot(&beta, &at_one) < 0.0 {
            beta.iter_mut().for_each(|b| *b = -*b);
        }
        let coeffs = RadialCoefficients { m, n, beta };
        let tail = coeffs.tail_ratio();
        if !(tail < TAIL_TOLERANCE) {
            return Err(Error::TruncationTooSmall { m, n, tail });
        }
        modes.push(RadialMode { chi, coeffs });
    }
    Ok(modes)
}

/// Angular factor `Y_{m,l}(theta)`.
pub fn angular_factor(m: usize, l: u8, theta: f64) -> f64 {
    if m == 0 {
        1.0 / (2.0 * PI).sqrt()
    } else if l == 1 {
        (m as f64 * theta).cos() / PI.sqrt()
    } else {
        (m as f64 * theta).sin() / PI.sqrt()
    }
}

/// Unit-disk membership with a little room for rounding on the boundary.
pub(crate) fn disk_radius(x: f64, y: f64) -> Result<f64> {
    let r = x.hypot(y);
    if !(r <= 1.0 + 1e-12) {
        return Err(Error::OutsideDisk { x, y });
    }
    Ok(r.min(1.0))
}

/// `psi_{m,n,l}` at points of the closed unit disk.
pub fn evaluate_pswf(
    index: PswfIndex,
    coeffs: &RadialCoefficients,
    points: &[[f64; 2]],
) -> Result<Vec<f64>> {
    if coeffs.m != index.m || coeffs.n != index.n {
        return Err(Error::BasisMismatch(format!(
            "coefficients for ({}, {}) used with index ({}, {}, {})",
            coeffs.m, coeffs.n, index.m, index.n, index.l
        )));
    }
    let mut p = Vec::with_capacity(coeffs.beta.len());
    points
        .iter()
        .map(|&[x, y]| {
            let r = disk_radius(x, y)?;
            p.clear();
            fill_jacobi(index.m, 2.0 * r * r - 1.0, coeffs.beta.len(), &mut p);
            let radial = r.powi(index.m as i32) * dot(&coeffs.beta, &p);
            Ok(radial * angular_factor(index.m, index.l, y.atan2(x)))
        })
        .collect()
}
