//! Prolate eigenvalues `alpha_{m,n}(c)` of the restricted Fourier transform.
//!
//! For `psi = R(r) Y_{m,l}(theta)` the Jacobi-Anger expansion reduces the
//! transform to `2 pi i^m Y_{m,l}(theta) int_0^1 J_m(c r rho) R(rho) rho drho`.
//! Testing that identity against `R(r) r` gives
//!
//! ```text
//! alpha = 2 pi i^m  (int int J_m(c r rho) R(r) R(rho) r rho) / (int R(r)^2 r)
//! ```
//!
//! i.e. the pointwise ratio averaged over all radii with weight `R^2 r`,
//! which never divides by a radial zero.

use super::radial::{dot, RadialCoefficients};
use crate::numerics::{bessel_j, gauss_legendre, jacobi::fill_jacobi};
use crate::{Complex, Error, Result};
use std::f64::consts::PI;

/// `i^m`.
pub fn i_pow(m: usize) -> Complex {
    match m % 4 {
        0 => Complex::new(1.0, 0.0),
        1 => Complex::new(0.0, 1.0),
        2 => Complex::new(-1.0, 0.0),
        _ => Complex::new(0.0, -1.0),
    }
}

/// Gauss-Legendre radial grid on `[0, 1]` and the Bessel kernel for one `m`.
#[derive(Debug, Clone)]
pub struct ProlateQuadrature {
    c: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ProlateQuadrature {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be positive, got {c}")));
        }
        let count = 200usize.max((4.0 * c).ceil() as usize + 80);
        let (nodes, weights) = gauss_legendre::<f64>(count)?.mapped(0.0, 1.0);
        Ok(Self { c, nodes, weights })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Symmetric table `J_m(c r_a r_b)`, row-major.
    pub fn kernel(&self, m: usize) -> Vec<f64> {
        let n = self.nodes.len();
        let mut k = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let v = bessel_j(m, self.c * self.nodes[a] * self.nodes[b]);
                k[a * n + b] = v;
                k[b * n + a] = v;
            }
        }
        k
    }

    /// `alpha_{m,n}` given the kernel table for `coeffs.m`.
    pub fn eigenvalue(&self, coeffs: &RadialCoefficients, kernel: &[f64]) -> Result<Complex> {
        let n = self.nodes.len();
        let mut p = Vec::with_capacity(coeffs.beta.len());
        // g_a = R(r_a) r_a w_a
        let g: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| {
                p.clear();
                fill_jacobi(coeffs.m, 2.0 * r * r - 1.0, coeffs.beta.len(), &mut p);
                r.powi(coeffs.m as i32) * dot(&coeffs.beta, &p) * r * w
            })
            .collect();
        let den: f64 = g
            .iter()
            .zip(&self.nodes)
            .zip(&self.weights)
            .map(|((&ga, &r), &w)| ga * ga / (r * w))
            .sum();
        if !(den > 1e-6) {
            return Err(Error::DegenerateRatio { m: coeffs.m, n: coeffs.n });
        }
        let mut num = 0.0;
        for a in 0..n {
            num += g[a] * dot(&kernel[a * n..(a + 1) * n], &g);
        }
        Ok(i_pow(coeffs.m) * (2.0 * PI * num / den))
    }

    /// `(F psi)(r) / Y_{m,l}` at one radius, for checks against the ratio form.
    pub fn transform_radial(&self, coeffs: &RadialCoefficients, r: f64) -> Complex {
        let mut s = 0.0;
        for (&rho, &w) in self.nodes.iter().zip(&self.weights) {
            s += w * rho * coeffs.radial(rho) * bessel_j(coeffs.m, self.c * r * rho);
        }
        i_pow(coeffs.m) * (2.0 * PI * s)
    }
}

/// `alpha_{m,n}(c)` for one set of radial coefficients.
pub fn compute_prolate_eigenvalue(
    m: usize,
    n: usize,
    coeffs: &RadialCoefficients,
    c: f64,
) -> Result<Complex> {
    if coeffs.m != m || coeffs.n != n {
        return Err(Error::BasisMismatch(format!(
            "coefficients for ({}, {}) requested as ({m}, {n})",
            coeffs.m, coeffs.n
        )));
    }
    let quad = ProlateQuadrature::new(c)?;
    quad.eigenvalue(coeffs, &quad.kernel(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pswf::compute_radial_eigens;

    #[test]
    fn alpha_phase_is_i_to_the_m() {
        for m in 0..5 {
            let modes = compute_radial_eigens(m, 12.0, 3).unwrap();
            for mode in &modes {
                let a = compute_prolate_eigenvalue(m, mode.coeffs.n, &mode.coeffs, 12.0).unwrap();
                let real = a * i_pow(m).conj();
                assert!(real.im.abs() <= 1e-12 * a.norm());
            }
        }
    }

    #[test]
    fn ratio_form_agrees_at_sample_radii() {
        let c = 20.0;
        let quad = ProlateQuadrature::new(c).unwrap();
        let modes = compute_radial_eigens(2, c, 2).unwrap();
        for mode in &modes {
            let alpha = quad.eigenvalue(&mode.coeffs, &quad.kernel(2)).unwrap();
            for r in [0.2, 0.45, 0.8] {
                let rad = mode.coeffs.radial(r);
                if rad.abs() < 1e-3 {
                    continue;
                }
                let ratio = quad.transform_radial(&mode.coeffs, r) / rad;
                assert!((ratio - alpha).norm() < 1e-9 * alpha.norm(), "r={r}");
            }
        }
    }

    #[test]
    fn mismatched_coefficients_rejected() {
        let modes = compute_radial_eigens(1, 10.0, 1).unwrap();
        assert!(compute_prolate_eigenvalue(1, 0, &modes[1].coeffs, 10.0).is_err());
    }
}
