//! The nonlinear forward map in coefficient space: expand on the inversion
//! grid, solve, process and project.

use crate::data::{process_far_field, stack, unstack, CoefficientVector, Projector};
use crate::pswf::PswfBasis;
use crate::scattering::{
    far_field, solve_total_fields_with, ContrastField, DirectionSet, GmresOptions, GreenKernel, GridSpec, SolveMethod,
};
use crate::{Complex, Result};

/// `sum_i q_i psi_i` on the cells of `grid` inside the disk, zero elsewhere.
pub fn expand_coefficients(coeffs: &CoefficientVector, basis: &PswfBasis, grid: &GridSpec) -> Result<Vec<Complex>> {
    coeffs.check_basis(basis)?;
    let cells: Vec<usize> = (0..grid.len()).filter(|&p| grid.in_disk(p)).collect();
    let points: Vec<[f64; 2]> = cells.iter().map(|&p| grid.center(p)).collect();
    let samples = basis.sample(&points)?;
    let values = expand(&coeffs.to_complex(), &samples, points.len());
    let mut out = vec![Complex::new(0.0, 0.0); grid.len()];
    for (&p, v) in cells.iter().zip(values) {
        out[p] = v;
    }
    Ok(out)
}

fn expand(q: &[Complex], samples: &[Vec<f64>], n: usize) -> Vec<Complex> {
    let mut out = vec![Complex::new(0.0, 0.0); n];
    for (qi, row) in q.iter().zip(samples) {
        for (o, s) in out.iter_mut().zip(row) {
            *o += qi * s;
        }
    }
    out
}

/// Keeps `Im q >= 0` and `Re(1 + q) >= 0.05` so the solve stays well posed.
fn clip(z: Complex) -> Complex {
    Complex::new(z.re.max(-0.95), z.im.max(0.0))
}

/// `P K_2 F K_1`: coefficients to projected far-field coefficients.
pub struct NonlinearForward {
    basis: PswfBasis,
    grid: GridSpec,
    cells: Vec<usize>,
    /// `samples[mode][cell]` over `cells`.
    samples: Vec<Vec<f64>>,
    kernel: GreenKernel,
    directions: DirectionSet,
    projector: Projector,
    method: SolveMethod,
}

impl NonlinearForward {
    pub fn new(basis: &PswfBasis, grid: GridSpec, directions: DirectionSet, method: SolveMethod) -> Result<Self> {
        let k = basis.c() / 2.0;
        let cells: Vec<usize> = (0..grid.len()).filter(|&p| grid.in_disk(p)).collect();
        let points: Vec<[f64; 2]> = cells.iter().map(|&p| grid.center(p)).collect();
        let samples = basis.sample(&points)?;
        let kernel = GreenKernel::new(grid.clone(), k)?;
        let projector = Projector::new(basis, directions)?;
        Ok(Self { basis: basis.clone(), grid, cells, samples, kernel, directions, projector, method })
    }

    /// GMRES settings used for ensemble members.
    pub fn default_gmres() -> GmresOptions {
        GmresOptions { tolerance: 1e-8, restart: 60, max_restarts: 50 }
    }

    pub fn basis(&self) -> &PswfBasis {
        &self.basis
    }

    /// The admissible contrast a coefficient vector is solved with.
    pub fn contrast(&self, stacked: &[f64]) -> Result<ContrastField> {
        let q = unstack(stacked)?;
        if q.len() != self.basis.len() {
            return Err(crate::Error::DimensionMismatch(format!(
                "{} modes for a basis of {}",
                q.len(),
                self.basis.len()
            )));
        }
        let values = expand(&q, &self.samples, self.cells.len());
        let mut full = vec![Complex::new(0.0, 0.0); self.grid.len()];
        for (&p, v) in self.cells.iter().zip(values) {
            full[p] = clip(v);
        }
        ContrastField::new(self.grid.clone(), full)
    }

    pub fn evaluate(&self, stacked: &[f64]) -> Result<Vec<f64>> {
        let q = self.contrast(stacked)?;
        let k = self.kernel.k();
        let total = solve_total_fields_with(&self.kernel, &q, &self.directions, self.method)?;
        let f = far_field(&q, k, &total, &self.directions)?;
        let data = process_far_field(&f, k)?;
        Ok(stack(&self.projector.project(&data)?.to_complex()))
    }
}
