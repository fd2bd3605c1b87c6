//! From far-field matrices to PSWF coefficient vectors.
//!
//! The far field for observation `x` and incidence `d` only depends on
//! `p = (d - x)/2` in the Born model, so `u(p) = u^inf(x; d)/k^2` is data on
//! the unit disk. Reciprocity makes the two direction pairs that share a `p`
//! carry the same value; both are averaged.

use crate::pswf::{PswfBasis, PswfIndex};
use crate::scattering::{keyed, parse, DirectionSet, FarFieldMatrix};
use crate::{Complex, ComplexDenseMatrix, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::Arc;

/// Identifies the coordinate system of a coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisLayout {
    pub c: f64,
    pub eta: f64,
    pub indices: Vec<PswfIndex>,
}

impl BasisLayout {
    pub fn of(basis: &PswfBasis) -> Arc<Self> {
        Arc::new(Self { c: basis.c(), eta: basis.eta(), indices: basis.indices() })
    }
}

/// `[K_2 q]`: real and imaginary part of each mode interleaved.
pub fn stack(q: &[Complex]) -> Vec<f64> {
    q.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Inverse of [`stack`].
pub fn unstack(v: &[f64]) -> Result<Vec<Complex>> {
    if v.len() % 2 != 0 {
        return Err(Error::DimensionMismatch(format!("cannot unstack odd length {}", v.len())));
    }
    Ok(v.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect())
}

/// Real coefficient vector of length `2 |J_eta|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    layout: Arc<BasisLayout>,
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(layout: Arc<BasisLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * layout.indices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} modes",
                values.len(),
                layout.indices.len()
            )));
        }
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: Arc<BasisLayout>) -> Self {
        let values = vec![0.0; 2 * layout.indices.len()];
        Self { layout, values }
    }

    pub fn from_complex(layout: Arc<BasisLayout>, q: &[Complex]) -> Self {
        assert_eq!(q.len(), layout.indices.len(), "one complex value per mode");
        Self { layout, values: stack(q) }
    }

    pub fn to_complex(&self) -> Vec<Complex> {
        self.values.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.layout), values)
    }

    /// Relative distance `||self - other|| / ||other||`.
    pub fn relative_error(&self, reference: &Self) -> f64 {
        let diff: f64 =
            self.values.iter().zip(&reference.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        diff / reference.norm()
    }

    pub fn check_basis(&self, basis: &PswfBasis) -> Result<()> {
        let l = &self.layout;
        if l.c != basis.c() || l.eta != basis.eta() || l.indices.len() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "vector for c={} eta={} with {} modes, basis c={} eta={} with {} modes",
                l.c,
                l.eta,
                l.indices.len(),
                basis.c(),
                basis.eta(),
                basis.len()
            )));
        }
        if l.indices.iter().zip(basis.entries()).any(|(a, e)| *a != e.index) {
            return Err(Error::BasisMismatch("mode ordering differs from the basis".into()));
        }
        Ok(())
    }

    /// `COEFF c=<c> eta=<eta> dim=<2|J|>` then `m n l re im` per mode.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "COEFF c={:.16e} eta={:.16e} dim={}", self.layout.c, self.layout.eta, self.dim())?;
        for (idx, pair) in self.layout.indices.iter().zip(self.values.chunks_exact(2)) {
            writeln!(w, "{} {} {} {:.16e} {:.16e}", idx.m, idx.n, idx.l, pair[0], pair[1])?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty coefficient file"))??;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 4 || f[0] != "COEFF" {
            return Err(Error::parse(format!("bad coefficient header `{header}`")));
        }
        let c: f64 = keyed(f[1], "c")?;
        let eta: f64 = keyed(f[2], "eta")?;
        let dim: usize = keyed(f[3], "dim")?;
        let mut indices = Vec::with_capacity(dim / 2);
        let mut values = Vec::with_capacity(dim);
        for line in lines.take(dim / 2) {
            let line = line?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 5 {
                return Err(Error::parse(format!("bad coefficient line `{line}`")));
            }
            indices.push(PswfIndex::new(parse(t[0])?, parse(t[1])?, parse(t[2])?)?);
            values.push(parse(t[3])?);
            values.push(parse(t[4])?);
        }
        if values.len() != dim {
            return Err(Error::parse(format!("expected dim {dim}, read {}", values.len())));
        }
        Self::new(Arc::new(BasisLayout { c, eta, indices }), values)
    }
}

/// Relative Frobenius noise level and RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("noise level must be nonnegative, got {delta}")));
        }
        Ok(Self { delta, seed })
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { delta: 0.03, seed: 0 }
    }
}

/// Uniform complex noise rescaled so that `||F^delta - F||_F = delta ||F||_F`.
pub fn add_noise(f: &FarFieldMatrix, spec: NoiseSpec) -> Result<FarFieldMatrix> {
    let spec = NoiseSpec::new(spec.delta, spec.seed)?;
    let fnorm = f.frobenius_norm();
    if spec.delta == 0.0 || fnorm == 0.0 {
        return Ok(f.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    let noise: Vec<Complex> =
        (0..f.entries.entries().len()).map(|_| Complex::new(dist.sample(&mut rng), dist.sample(&mut rng))).collect();
    let nnorm = noise.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = spec.delta * fnorm / nnorm;
    let entries: Vec<Complex> =
        f.entries.entries().iter().zip(&noise).map(|(a, e)| a + e * scale).collect();
    let n = f.len();
    FarFieldMatrix::new(f.directions, f.k, ComplexDenseMatrix::from_entries(n, n, entries)?)
}

/// Far-field data folded onto the disk: `samples[(i, j)] = u(p_ij)` with
/// `p_ij = (d_j - x_i)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedData {
    pub directions: DirectionSet,
    pub k: f64,
    pub samples: ComplexDenseMatrix,
}

impl ProcessedData {
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        sample_point(&self.directions, i, j)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        quadrature_weight(&self.directions, i, j)
    }

    /// `PROCESSED k=<k> N=<n>` then `i j p_x p_y w re im` lines.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.directions.len();
        writeln!(w, "PROCESSED k={:.16e} N={n}", self.k)?;
        for i in 0..n {
            for j in 0..n {
                let [px, py] = self.point(i, j);
                let z = self.samples[(i, j)];
                writeln!(
                    w,
                    "{i} {j} {px:.16e} {py:.16e} {:.16e} {:.16e} {:.16e}",
                    self.weight(i, j),
                    z.re,
                    z.im
                )?;
            }
        }
        Ok(())
    }
}

/// `(d_j - x_i) / 2`.
pub fn sample_point(dirs: &DirectionSet, i: usize, j: usize) -> [f64; 2] {
    let (x, d) = (dirs.unit(i), dirs.unit(j));
    [0.5 * (d[0] - x[0]), 0.5 * (d[1] - x[1])]
}

/// `(2 pi / N)^2 |sin(phi_i - phi_j)| / 8`: the Jacobian of
/// `(phi_1, phi_2) -> p` is `|sin(phi_1 - phi_2)|/4` and the torus covers
/// the disk twice.
pub fn quadrature_weight(dirs: &DirectionSet, i: usize, j: usize) -> f64 {
    let n = dirs.len();
    let h = 2.0 * PI / n as f64;
    // Folding the index gap keeps reciprocal pairs bit-identical.
    let gap = (i + n - j) % n;
    let gap = gap.min(n - gap);
    h * h * (h * gap as f64).sin().abs() / 8.0
}

/// Averages reciprocal pairs and rescales by `1/k^2`.
pub fn process_far_field(f: &FarFieldMatrix, k: f64) -> Result<ProcessedData> {
    let dirs = f.directions;
    if !dirs.is_even() {
        return Err(Error::invalid(format!("reciprocal pairing needs even N, got {}", dirs.len())));
    }
    if !(k > 0.0) || ((k - f.k) / k).abs() > 1e-12 {
        return Err(Error::invalid(format!("wave number {k} does not match the data ({})", f.k)));
    }
    let n = dirs.len();
    let inv_k2 = 1.0 / (k * k);
    let forward: Complex = (0..n).map(|i| f.get(i, i)).sum::<Complex>() / n as f64;
    let samples = ComplexDenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            forward * inv_k2
        } else {
            let pair = f.get(dirs.opposite(j), dirs.opposite(i));
            (f.get(i, j) + pair) * (0.5 * inv_k2)
        }
    });
    Ok(ProcessedData { directions: dirs, k, samples })
}

/// PSWF values at the direction-pair nodes, reusable across data sets.
#[derive(Debug, Clone)]
pub struct Projector {
    layout: Arc<BasisLayout>,
    c: f64,
    directions: DirectionSet,
    /// `weighted[mode][i * N + j] = w_ij psi_mode(p_ij)`.
    weighted: Vec<Vec<f64>>,
}

impl Projector {
    pub fn new(basis: &PswfBasis, directions: DirectionSet) -> Result<Self> {
        let n = directions.len();
        let points: Vec<[f64; 2]> =
            (0..n * n).map(|ij| sample_point(&directions, ij / n, ij % n)).collect();
        let weights: Vec<f64> = (0..n * n).map(|ij| quadrature_weight(&directions, ij / n, ij % n)).collect();
        let mut weighted = basis.sample(&points)?;
        for row in &mut weighted {
            for (v, w) in row.iter_mut().zip(&weights) {
                *v *= w;
            }
        }
        Ok(Self { layout: BasisLayout::of(basis), c: basis.c(), directions, weighted })
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn project(&self, data: &ProcessedData) -> Result<CoefficientVector> {
        if ((2.0 * data.k - self.c) / self.c).abs() > 1e-12 {
            return Err(Error::BasisMismatch(format!(
                "data at k = {} need c = {}, basis has c = {}",
                data.k,
                2.0 * data.k,
                self.c
            )));
        }
        if data.directions != self.directions {
            return Err(Error::DimensionMismatch("direction sets differ".into()));
        }
        let samples = data.samples.entries();
        let coeffs: Vec<Complex> = self
            .weighted
            .iter()
            .map(|row| row.iter().zip(samples).map(|(w, u)| u * w).sum())
            .collect();
        Ok(CoefficientVector::from_complex(Arc::clone(&self.layout), &coeffs))
    }
}

/// `<u, psi_i>_B` by the direction-pair quadrature.
pub fn project_onto_basis(data: &ProcessedData, basis: &PswfBasis) -> Result<CoefficientVector> {
    if ((2.0 * data.k - basis.c()) / basis.c()).abs() > 1e-12 {
        return Err(Error::BasisMismatch(format!(
            "data at k = {} need c = {}, basis has c = {}",
            data.k,
            2.0 * data.k,
            basis.c()
        )));
    }
    Projector::new(basis, data.directions)?.project(data)
}
