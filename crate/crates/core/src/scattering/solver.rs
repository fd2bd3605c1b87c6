//! Collocation solves of `(I - k^2 G diag(q)) u = u^i`.

use super::kernel::GreenKernel;
use super::{ContrastField, DirectionSet, GridSpec};
use crate::numerics::LuFactorization;
use crate::{Complex, ComplexDenseMatrix, Error, Result};

const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

/// Total fields on every cell, one column per incident direction.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalFields {
    pub grid: GridSpec,
    pub k: f64,
    pub incident: DirectionSet,
    /// `fields[j][cell]` for incident direction `j`.
    pub fields: Vec<Vec<Complex>>,
}

/// Plane wave `exp(i k d.x)` on the cell centers.
pub fn incident_wave(grid: &GridSpec, k: f64, direction: [f64; 2]) -> Vec<Complex> {
    (0..grid.len())
        .map(|p| {
            let [x, y] = grid.center(p);
            Complex::from_polar(1.0, k * (direction[0] * x + direction[1] * y))
        })
        .collect()
}

/// Restarted GMRES settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Relative residual target `||b - A x|| / ||b||`.
    pub tolerance: f64,
    pub restart: usize,
    pub max_restarts: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, restart: 60, max_restarts: 30 }
    }
}

/// How the Lippmann-Schwinger system is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    /// LU of the dense system restricted to the support of `q`.
    Direct,
    /// FFT-accelerated GMRES on the full grid.
    Iterative(GmresOptions),
}

/// Direct solve, one factorization shared by every incident direction.
pub fn solve_total_fields(q: &ContrastField, k: f64, incident: &DirectionSet) -> Result<TotalFields> {
    let kernel = GreenKernel::new(q.grid().clone(), k)?;
    solve_total_fields_with(&kernel, q, incident, SolveMethod::Direct)
}

/// Solve against a prebuilt kernel.
pub fn solve_total_fields_with(
    kernel: &GreenKernel,
    q: &ContrastField,
    incident: &DirectionSet,
    method: SolveMethod,
) -> Result<TotalFields> {
    if kernel.grid() != q.grid() {
        return Err(Error::DimensionMismatch("contrast and kernel use different grids".into()));
    }
    q.check_admissible()?;
    let grid = q.grid().clone();
    let k = kernel.k();
    let support: Vec<usize> = (0..grid.len()).filter(|&p| q.values()[p] != ZERO).collect();
    let incident_fields: Vec<Vec<Complex>> =
        (0..incident.len()).map(|j| incident_wave(&grid, k, incident.unit(j))).collect();
    if support.is_empty() {
        return Ok(TotalFields { grid, k, incident: incident.clone(), fields: incident_fields });
    }
    let fields = match method {
        SolveMethod::Direct => solve_direct(kernel, q, &support, incident_fields)?,
        SolveMethod::Iterative(opts) => incident_fields
            .into_iter()
            .map(|ui| solve_gmres(kernel, q, &ui, opts))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(TotalFields { grid, k, incident: incident.clone(), fields })
}

fn solve_direct(
    kernel: &GreenKernel,
    q: &ContrastField,
    support: &[usize],
    incident_fields: Vec<Vec<Complex>>,
) -> Result<Vec<Vec<Complex>>> {
    let s = support.len();
    let qv = q.values();
    let a = ComplexDenseMatrix::from_fn(s, s, |a, b| {
        let delta = if a == b { Complex::new(1.0, 0.0) } else { ZERO };
        delta - kernel.coupling(support[a], support[b]) * qv[support[b]]
    });
    let lu = LuFactorization::new(&a)?;
    let mut out = Vec::with_capacity(incident_fields.len());
    let mut rhs = vec![ZERO; s];
    for ui in incident_fields {
        for (r, &p) in rhs.iter_mut().zip(support) {
            *r = ui[p];
        }
        lu.solve_in_place(&mut rhs);
        // Off the support the total field follows from one application of
        // the volume potential.
        let mut source = vec![ZERO; ui.len()];
        for (&p, &u) in support.iter().zip(&rhs) {
            source[p] = qv[p] * u;
        }
        let scattered = kernel.apply(&source);
        let mut total: Vec<Complex> = ui.iter().zip(&scattered).map(|(a, b)| a + b).collect();
        for (&p, &u) in support.iter().zip(&rhs) {
            total[p] = u;
        }
        out.push(total);
    }
    Ok(out)
}

fn norm(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(a: &[Complex], b: &[Complex]) -> Complex {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// GMRES for `u - K(q u) = u^i`, started from `u^i`.
fn solve_gmres(kernel: &GreenKernel, q: &ContrastField, ui: &[Complex], opts: GmresOptions) -> Result<Vec<Complex>> {
    let qv = q.values();
    let apply = |u: &[Complex]| -> Vec<Complex> {
        let src: Vec<Complex> = u.iter().zip(qv).map(|(a, b)| a * b).collect();
        let ku = kernel.apply(&src);
        u.iter().zip(&ku).map(|(a, b)| a - b).collect()
    };
    gmres(apply, ui, ui.to_vec(), opts)
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
pub fn gmres(
    apply: impl Fn(&[Complex]) -> Vec<Complex>,
    b: &[Complex],
    mut x: Vec<Complex>,
    opts: GmresOptions,
) -> Result<Vec<Complex>> {
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![ZERO; b.len()]);
    }
    let target = opts.tolerance * bnorm;
    let m = opts.restart.max(1);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..opts.max_restarts.max(1) {
        let ax = apply(&x);
        let r: Vec<Complex> = b.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let beta = norm(&r);
        residual = beta;
        if beta <= target {
            return Ok(x);
        }
        let mut basis: Vec<Vec<Complex>> = vec![r.iter().map(|z| z / beta).collect()];
        // Column-major Hessenberg after rotations, i.e. the triangular factor.
        let mut h: Vec<Vec<Complex>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex> = Vec::with_capacity(m);
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex::new(beta, 0.0);
        let mut steps = 0;
        for j in 0..m {
            iterations += 1;
            let mut w = apply(&basis[j]);
            let mut col = vec![ZERO; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dotc(v, &w);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let wn = norm(&w);
            col[j + 1] = Complex::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = ZERO;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            steps = j + 1;
            residual = g[j + 1].norm();
            if residual <= target || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|z| z / wn).collect());
        }
        // Back substitution for the Krylov coefficients.
        let mut y = vec![ZERO; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for l in i + 1..steps {
                s -= h[l][i] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += yi * vk;
            }
        }
        if residual <= target {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { residual: residual / bnorm, iterations })
}

/// Rotation `(c, s)` with `c` real so that `[c s; -s* c] [a; b] = [r; 0]`.
fn givens(a: Complex, b: Complex) -> (f64, Complex) {
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    let an = a.norm();
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}
