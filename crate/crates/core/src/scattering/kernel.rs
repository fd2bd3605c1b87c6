//! Discretized volume potential `k^2 int Phi(x - y) v(y) dy` on a uniform grid.
//!
//! Off-diagonal couplings use the midpoint rule; the self cell integrates
//! `Phi` exactly over the disk of equal area. The coupling depends only on
//! the index offset, so it is applied as a zero-padded FFT convolution.

use super::GridSpec;
use crate::numerics::hankel1;
use crate::{Complex, Result};
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

const I: Complex = Complex { re: 0.0, im: 1.0 };

/// `int_{|y| < rho} Phi(0, y) dy` with `rho = sqrt(area / pi)` and
/// `Phi(x, y) = (i/4) H_0^(1)(k |x - y|)`.
///
/// Closed form `(i pi rho / 2k) H_1^(1)(k rho) - 1/k^2`, from
/// `int_0^rho H_0(kr) r dr = rho H_1(k rho)/k` and the small-argument limit
/// `r H_1(kr) -> -2i/(pi k)`.
pub fn self_cell_weight(k: f64, cell_area: f64) -> Result<Complex> {
    if !(k > 0.0) || !(cell_area > 0.0) {
        return Err(crate::Error::invalid(format!(
            "self-cell weight needs positive k and area, got {k}, {cell_area}"
        )));
    }
    let rho = (cell_area / PI).sqrt();
    let h1 = hankel1(1, k * rho)?;
    Ok(I * (PI * rho / (2.0 * k)) * h1 - Complex::new(1.0 / (k * k), 0.0))
}

/// `Phi(x, y)` for `|x - y| = r > 0`.
pub fn green(k: f64, r: f64) -> Result<Complex> {
    Ok(I * 0.25 * hankel1(0, k * r)?)
}

/// Translation-invariant coupling matrix `k^2 G` of one grid and wave number.
pub struct GreenKernel {
    grid: GridSpec,
    k: f64,
    /// `k^2 G` for offsets `(dy, dx)` in `[-(n-1), n-1]^2`.
    table: Vec<Complex>,
    padded: usize,
    /// Transposed-layout spectrum of the padded table.
    spectrum: Vec<Complex>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GreenKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenKernel").field("grid", &self.grid).field("k", &self.k).finish()
    }
}

impl GreenKernel {
    pub fn new(grid: GridSpec, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(crate::Error::invalid(format!("wave number must be positive, got {k}")));
        }
        let n = grid.cells_per_side();
        let h = grid.cell_width();
        let k2 = k * k;
        let area = grid.cell_area();
        let self_term = k2 * self_cell_weight(k, area)?;

        // Radial symmetry: fill the wedge 0 <= b <= a, then mirror.
        let mut wedge = vec![Complex::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..=a {
                let v = if a == 0 {
                    self_term
                } else {
                    k2 * area * green(k, h * ((a * a + b * b) as f64).sqrt())?
                };
                wedge[a * n + b] = v;
                wedge[b * n + a] = v;
            }
        }
        let side = 2 * n - 1;
        let mut table = vec![Complex::new(0.0, 0.0); side * side];
        for dy in 0..side {
            for dx in 0..side {
                let a = (dy as isize - (n as isize - 1)).unsigned_abs();
                let b = (dx as isize - (n as isize - 1)).unsigned_abs();
                table[dy * side + dx] = wedge[a * n + b];
            }
        }

        let padded = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);
        let mut kernel = Self {
            grid,
            k,
            table,
            padded,
            spectrum: Vec::new(),
            forward,
            inverse,
        };
        let mut buf = vec![Complex::new(0.0, 0.0); padded * padded];
        for dy in 0..side {
            for dx in 0..side {
                let py = (dy + padded - (n - 1)) % padded;
                let px = (dx + padded - (n - 1)) % padded;
                buf[py * padded + px] = kernel.table[dy * side + dx];
            }
        }
        kernel.spectrum = kernel.forward_2d(buf, padded);
        Ok(kernel)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `k^2 G(x_p, x_q)` for cells `p`, `q`.
    pub fn coupling(&self, p: usize, q: usize) -> Complex {
        let n = self.grid.cells_per_side();
        let side = 2 * n - 1;
        let dy = (p / n + n - 1) - q / n;
        let dx = (p % n + n - 1) - q % n;
        self.table[dy * side + dx]
    }

    /// Row FFTs over the first `rows` rows, transpose, then all column FFTs.
    fn forward_2d(&self, mut buf: Vec<Complex>, rows: usize) -> Vec<Complex> {
        let p = self.padded;
        let mut scratch = vec![Complex::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(p).take(rows) {
            self.forward.process_with_scratch(row, &mut scratch);
        }
        let mut t = transpose(&buf, p);
        for row in t.chunks_exact_mut(p) {
            self.forward.process_with_scratch(row, &mut scratch);
        }
        t
    }

    /// `(k^2 G v)` on all cells for a cell vector `v`.
    pub fn apply(&self, v: &[Complex]) -> Vec<Complex> {
        let n = self.grid.cells_per_side();
        let p = self.padded;
        let mut buf = vec![Complex::new(0.0, 0.0); p * p];
        for (dst, src) in buf.chunks_exact_mut(p).zip(v.chunks_exact(n)) {
            dst[..n].copy_from_slice(src);
        }
        let mut t = self.forward_2d(buf, n);
        for (a, b) in t.iter_mut().zip(&self.spectrum) {
            *a *= b;
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        for row in t.chunks_exact_mut(p) {
            self.inverse.process_with_scratch(row, &mut scratch);
        }
        let mut buf = transpose(&t, p);
        let scale = 1.0 / (p * p) as f64;
        let mut out = Vec::with_capacity(n * n);
        for row in buf.chunks_exact_mut(p).take(n) {
            self.inverse.process_with_scratch(row, &mut scratch);
            out.extend(row[..n].iter().map(|z| z * scale));
        }
        out
    }
}

fn transpose(a: &[Complex], p: usize) -> Vec<Complex> {
    let mut t = vec![Complex::new(0.0, 0.0); p * p];
    const B: usize = 16;
    for ib in (0..p).step_by(B) {
        for jb in (0..p).step_by(B) {
            for i in ib..(ib + B).min(p) {
                for j in jb..(jb + B).min(p) {
                    t[j * p + i] = a[i * p + j];
                }
            }
        }
    }
    t
}
