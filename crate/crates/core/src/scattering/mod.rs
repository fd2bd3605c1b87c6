//! Forward scattering: the Lippmann-Schwinger model and its Born linearization.
//!
//! The contrast lives on the cell centers of a uniform grid over `[-h, h]^2`.
//! Far fields use the synthesis
//! `u^inf(x, d) = k^2 sum_cells area exp(-i k x.y) q(y) u^t(y; d)`,
//! which is exactly the Born far field when `u^t` is the incident wave.

pub mod kernel;
pub mod solver;

pub use kernel::{green, self_cell_weight, GreenKernel};
pub use solver::{
    gmres, incident_wave, solve_total_fields, solve_total_fields_with, GmresOptions, SolveMethod,
    TotalFields,
};

use crate::data::CoefficientVector;
use crate::pswf::PswfBasis;
use crate::{Complex, ComplexDenseMatrix, Error, Result};
use std::f64::consts::PI;
use std::io::{BufRead, Write};

/// `N_g x N_g` cells covering `[-h, h]^2`; cell `p = iy * N_g + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    half_width: f64,
    cells_per_side: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, cells_per_side: usize) -> Result<Self> {
        if !(half_width >= 1.0) || !half_width.is_finite() {
            return Err(Error::invalid(format!("grid must cover the unit disk, got h = {half_width}")));
        }
        if cells_per_side == 0 {
            return Err(Error::invalid("grid needs at least one cell per side"));
        }
        Ok(Self { half_width, cells_per_side })
    }

    /// The unit square grid `[-1, 1]^2` with `n` cells per side.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(1.0, n)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn len(&self) -> usize {
        self.cells_per_side * self.cells_per_side
    }

    pub fn is_empty(&self) -> bool {
        self.cells_per_side == 0
    }

    pub fn cell_width(&self) -> f64 {
        2.0 * self.half_width / self.cells_per_side as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_width().powi(2)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.cell_width()
    }

    pub fn center(&self, p: usize) -> [f64; 2] {
        let n = self.cells_per_side;
        [self.coordinate(p % n), self.coordinate(p / n)]
    }

    pub fn in_disk(&self, p: usize) -> bool {
        let [x, y] = self.center(p);
        x * x + y * y <= 1.0
    }
}

/// Complex contrast `q` at the cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastField {
    grid: GridSpec,
    values: Vec<Complex>,
}

impl ContrastField {
    pub fn zeros(grid: GridSpec) -> Self {
        let values = vec![Complex::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at centers inside the unit disk; zero elsewhere.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> Complex) -> Self {
        let values = (0..grid.len())
            .map(|p| {
                if grid.in_disk(p) {
                    let [x, y] = grid.center(p);
                    f(x, y)
                } else {
                    Complex::new(0.0, 0.0)
                }
            })
            .collect();
        Self { grid, values }
    }

    /// Wraps cell values after checking the admissibility conditions.
    pub fn new(grid: GridSpec, values: Vec<Complex>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        let field = Self { grid, values };
        field.check_admissible()?;
        Ok(field)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `Re(1 + q) > 0`, `Im q >= 0`, finite, and `q = 0` off the unit disk.
    pub fn check_admissible(&self) -> Result<()> {
        for (cell, v) in self.values.iter().enumerate() {
            let reason = if !(v.re.is_finite() && v.im.is_finite()) {
                "non-finite value"
            } else if !(1.0 + v.re > 0.0) {
                "Re(1 + q) <= 0"
            } else if v.im < 0.0 {
                "Im(q) < 0"
            } else if !self.grid.in_disk(cell) && (v.re != 0.0 || v.im != 0.0) {
                "nonzero outside the unit disk"
            } else {
                continue;
            };
            return Err(Error::Inadmissible { cell, reason: reason.into() });
        }
        Ok(())
    }

    /// Text format: `FIELD N=<n> h=<h>` then one `re im` pair per cell.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "FIELD N={} h={:.16e}", self.grid.cells_per_side, self.grid.half_width)?;
        for v in &self.values {
            writeln!(w, "{:.16e} {:.16e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty field file"))??;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 3 || f[0] != "FIELD" {
            return Err(Error::parse(format!("bad field header `{header}`")));
        }
        let n: usize = keyed(f[1], "N")?;
        let h: f64 = keyed(f[2], "h")?;
        let grid = GridSpec::new(h, n)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines.take(grid.len()) {
            values.push(parse_complex(&line?)?);
        }
        Self::new(grid, values)
    }
}

/// `N` equispaced directions at angles `2 pi i / N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionSet {
    n: usize,
}

impl DirectionSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("direction set needs at least one direction"));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_even(&self) -> bool {
        self.n % 2 == 0
    }

    pub fn angle(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n as f64
    }

    pub fn unit(&self, i: usize) -> [f64; 2] {
        let (s, c) = self.angle(i).sin_cos();
        [c, s]
    }

    /// Index of `-d_i`; only exact for even `N`.
    pub fn opposite(&self, i: usize) -> usize {
        (i + self.n / 2) % self.n
    }
}

/// `entries[(i, j)] = u^inf(x_i; d_j; k)`: row = observation, column = incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMatrix {
    pub directions: DirectionSet,
    pub k: f64,
    pub entries: ComplexDenseMatrix,
}

impl FarFieldMatrix {
    pub fn new(directions: DirectionSet, k: f64, entries: ComplexDenseMatrix) -> Result<Self> {
        if entries.rows() != directions.len() || entries.cols() != directions.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} far field for {} directions",
                entries.rows(),
                entries.cols(),
                directions.len()
            )));
        }
        if entries.entries().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("far field has non-finite entries"));
        }
        Ok(Self { directions, k, entries })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.entries[(i, j)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.frobenius_norm()
    }

    /// `max |F(i,j) - F(j', i')| / max |F|` over the reciprocal pairs
    /// `x_2 = -d_1`, `d_2 = -x_1`.
    pub fn reciprocity_defect(&self) -> Result<f64> {
        if !self.directions.is_even() {
            return Err(Error::invalid("reciprocity pairing needs an even number of directions"));
        }
        let n = self.len();
        let scale = self.entries.entries().iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let (pi, pj) = (self.directions.opposite(j), self.directions.opposite(i));
                worst = worst.max((self.get(i, j) - self.get(pi, pj)).norm());
            }
        }
        Ok(worst / scale)
    }

    /// Text format: `FARFIELD k=<k> N=<n>` then `i j re im` lines.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.len();
        writeln!(w, "FARFIELD k={:.16e} N={n}", self.k)?;
        for i in 0..n {
            for j in 0..n {
                let z = self.get(i, j);
                writeln!(w, "{i} {j} {:.16e} {:.16e}", z.re, z.im)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty far-field file"))??;
        let f: Vec<&str> = header.split_whitespace().collect();
        if f.len() != 3 || f[0] != "FARFIELD" {
            return Err(Error::parse(format!("bad far-field header `{header}`")));
        }
        let k: f64 = keyed(f[1], "k")?;
        let n: usize = keyed(f[2], "N")?;
        let mut entries = ComplexDenseMatrix::zeros(n, n);
        let mut seen = 0usize;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(Error::parse(format!("bad far-field line `{line}`")));
            }
            let i: usize = parse(t[0])?;
            let j: usize = parse(t[1])?;
            if i >= n || j >= n {
                return Err(Error::parse(format!("index ({i}, {j}) out of range")));
            }
            entries[(i, j)] = Complex::new(parse(t[2])?, parse(t[3])?);
            seen += 1;
        }
        if seen != n * n {
            return Err(Error::parse(format!("expected {} far-field entries, found {seen}", n * n)));
        }
        Self::new(DirectionSet::new(n)?, k, entries)
    }
}

pub(crate) fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(format!("cannot parse `{s}`")))
}

pub(crate) fn keyed<T: std::str::FromStr>(field: &str, key: &str) -> Result<T> {
    let v = field
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| Error::parse(format!("expected `{key}=`, got `{field}`")))?;
    parse(v)
}

fn parse_complex(line: &str) -> Result<Complex> {
    let t: Vec<&str> = line.split_whitespace().collect();
    if t.len() != 2 {
        return Err(Error::parse(format!("expected `re im`, got `{line}`")));
    }
    Ok(Complex::new(parse(t[0])?, parse(t[1])?))
}

/// `k^2 area sum_p exp(-i k x_i.y_p) q_p u_j(y_p)` over the support of `q`.
fn synthesize(
    q: &ContrastField,
    k: f64,
    observation: &DirectionSet,
    field: impl Fn(usize, usize) -> Complex,
    incidence: usize,
) -> Result<FarFieldMatrix> {
    let grid = q.grid();
    let support: Vec<usize> = (0..grid.len()).filter(|&p| q.values()[p] != Complex::new(0.0, 0.0)).collect();
    let n_obs = observation.len();
    let scale = k * k * grid.cell_area();
    // weighted[i][s] = scale exp(-i k x_i.y_s) q_s
    let weighted: Vec<Vec<Complex>> = (0..n_obs)
        .map(|i| {
            let [dx, dy] = observation.unit(i);
            support
                .iter()
                .map(|&p| {
                    let [x, y] = grid.center(p);
                    Complex::from_polar(scale, -k * (dx * x + dy * y)) * q.values()[p]
                })
                .collect()
        })
        .collect();
    let mut entries = ComplexDenseMatrix::zeros(n_obs, incidence);
    let mut column = vec![Complex::new(0.0, 0.0); support.len()];
    for j in 0..incidence {
        for (c, &p) in column.iter_mut().zip(&support) {
            *c = field(j, p);
        }
        for (i, row) in weighted.iter().enumerate() {
            entries[(i, j)] = row.iter().zip(&column).map(|(a, b)| a * b).sum();
        }
    }
    FarFieldMatrix::new(*observation, k, entries)
}

/// Far field of the full model from solved total fields.
pub fn far_field(
    q: &ContrastField,
    k: f64,
    total: &TotalFields,
    observation: &DirectionSet,
) -> Result<FarFieldMatrix> {
    if &total.grid != q.grid() || total.k != k {
        return Err(Error::DimensionMismatch("total fields belong to a different grid or k".into()));
    }
    if total.incident != *observation {
        return Err(Error::DimensionMismatch(
            "incident and observation directions must coincide for a square far field".into(),
        ));
    }
    synthesize(q, k, observation, |j, p| total.fields[j][p], total.incident.len())
}

/// Born far field `k^2 int exp(-i k x.y) q(y) exp(i k d.y) dy` by the same
/// midpoint rule.
pub fn born_far_field(
    q: &ContrastField,
    k: f64,
    incident: &DirectionSet,
    observation: &DirectionSet,
) -> Result<FarFieldMatrix> {
    if incident != observation {
        return Err(Error::DimensionMismatch(
            "incident and observation directions must coincide for a square far field".into(),
        ));
    }
    let grid = q.grid();
    let plane = |j: usize, p: usize| {
        let [dx, dy] = incident.unit(j);
        let [x, y] = grid.center(p);
        Complex::from_polar(1.0, k * (dx * x + dy * y))
    };
    synthesize(q, k, observation, plane, incident.len())
}

/// Full-model far field: direct solve followed by synthesis.
pub fn full_far_field(q: &ContrastField, k: f64, directions: &DirectionSet) -> Result<FarFieldMatrix> {
    let total = solve_total_fields(q, k, directions)?;
    far_field(q, k, &total, directions)
}

/// The Born map in PSWF coordinates: multiplication by `alpha` per mode.
pub fn born_mode_map(coeffs: &CoefficientVector, basis: &PswfBasis) -> Result<CoefficientVector> {
    coeffs.check_basis(basis)?;
    let values = coeffs
        .to_complex()
        .iter()
        .zip(basis.entries())
        .map(|(z, e)| z * e.alpha)
        .collect::<Vec<_>>();
    Ok(CoefficientVector::from_complex(coeffs.layout().clone(), &values))
}
