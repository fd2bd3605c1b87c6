//! Disk prolate spheroidal wave functions and the low-rank index set.
//!
//! `psi_{m,n,l}(x) = r^m phi_{m,n}(2r^2 - 1) Y_{m,l}(theta)` are the real
//! eigenfunctions of the restricted Fourier transform
//! `(F_b psi)(x) = int_B exp(i c x.y) psi(y) dy` on the unit disk `B`.
//! They are computed through the commuting Sturm-Liouville operator (see
//! [`radial`]) and paired with their prolate eigenvalues (see [`prolate`]).
//! A [`PswfBasis`] keeps every index whose `|alpha|` exceeds the cutoff.

pub mod prolate;
pub mod radial;

pub use prolate::{compute_prolate_eigenvalue, ProlateQuadrature};
pub use radial::{
    angular_factor, build_sturm_liouville_matrix, compute_radial_eigens,
    compute_radial_eigens_with_truncation, default_truncation, evaluate_pswf, RadialCoefficients,
    RadialMode,
};

use crate::numerics::jacobi::fill_jacobi;
use crate::{Complex, Error, Result};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

/// `(m, n, l)` with `l = 1` (cosine) or `l = 2` (sine); `m = 0` only has `l = 1`.
///
/// Ordering is lexicographic in `(m, n, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PswfIndex {
    pub m: usize,
    pub n: usize,
    pub l: u8,
}

impl PswfIndex {
    pub fn new(m: usize, n: usize, l: u8) -> Result<Self> {
        let ok = if m == 0 { l == 1 } else { l == 1 || l == 2 };
        if !ok {
            return Err(Error::invalid(format!("l = {l} is not allowed for m = {m}")));
        }
        Ok(Self { m, n, l })
    }

    /// Angular multiplicity of `m`: 1 for `m = 0`, else 2.
    pub fn multiplicity(m: usize) -> u8 {
        if m == 0 {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for PswfIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.m, self.n, self.l)
    }
}

/// Cutoff `eta = fraction * |alpha_00(c)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCutoff {
    fraction: f64,
}

impl SpectralCutoff {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(format!("cutoff fraction must lie in (0, 1), got {fraction}")));
        }
        Ok(Self { fraction })
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn threshold(&self, alpha00: f64) -> f64 {
        self.fraction * alpha00
    }
}

impl Default for SpectralCutoff {
    fn default() -> Self {
        Self { fraction: 0.9 }
    }
}

/// One basis function and its eigenvalues. Both `l` of the same `(m, n)`
/// share the radial coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEntry {
    pub index: PswfIndex,
    pub chi: f64,
    pub alpha: Complex,
    pub coeffs: Arc<RadialCoefficients>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Complete,
    /// The cutoff is at or above `|alpha_00|`; nothing survives.
    Empty,
}

/// The index set `J_eta` in lexicographic order together with the data
/// needed to evaluate each `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PswfBasis {
    c: f64,
    eta: f64,
    entries: Vec<BasisEntry>,
}

/// `|alpha_00(c)|`.
pub fn leading_eigenvalue(c: f64) -> Result<f64> {
    let quad = ProlateQuadrature::new(c)?;
    let mode = compute_radial_eigens(0, c, 0)?.remove(0);
    Ok(quad.eigenvalue(&mode.coeffs, &quad.kernel(0))?.norm())
}

/// Basis for bandwidth `c` keeping `|alpha| > cutoff.fraction * |alpha_00|`.
pub fn build_basis(c: f64, cutoff: SpectralCutoff) -> Result<PswfBasis> {
    let eta = cutoff.threshold(leading_eigenvalue(c)?);
    build_basis_above(c, eta)
}

/// Basis for bandwidth `c` keeping `|alpha| > eta`.
///
/// For each `m` the radial orders are scanned until `|alpha_{m,n}| <= eta`;
/// the sweep over `m` ends at the first `m` whose `n = 0` mode is cut.
pub fn build_basis_above(c: f64, eta: f64) -> Result<PswfBasis> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("cutoff must be positive, got {eta}")));
    }
    let quad = ProlateQuadrature::new(c)?;
    let m_limit = (10.0 * c).ceil() as usize + 100;
    let mut entries = Vec::new();
    for m in 0..=m_limit {
        let kernel = quad.kernel(m);
        let mut n_max = (0.5 * c).ceil() as usize + 8;
        let kept = loop {
            let mut kept = Vec::new();
            let mut closed = false;
            for mode in compute_radial_eigens(m, c, n_max)? {
                let alpha = quad.eigenvalue(&mode.coeffs, &kernel)?;
                if alpha.norm() <= eta {
                    closed = true;
                    break;
                }
                kept.push((mode, alpha));
            }
            if closed {
                break kept;
            }
            n_max *= 2;
        };
        if kept.is_empty() {
            return Ok(PswfBasis { c, eta, entries });
        }
        for (mode, alpha) in kept {
            let coeffs = Arc::new(mode.coeffs);
            for l in 1..=PswfIndex::multiplicity(m) {
                entries.push(BasisEntry {
                    index: PswfIndex { m, n: coeffs.n, l },
                    chi: mode.chi,
                    alpha,
                    coeffs: Arc::clone(&coeffs),
                });
            }
        }
    }
    Err(Error::invalid(format!("angular sweep did not terminate below m = {m_limit}")))
}

impl PswfBasis {
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn status(&self) -> BasisStatus {
        if self.entries.is_empty() {
            BasisStatus::Empty
        } else {
            BasisStatus::Complete
        }
    }

    pub fn indices(&self) -> Vec<PswfIndex> {
        self.entries.iter().map(|e| e.index).collect()
    }

    pub fn position(&self, index: PswfIndex) -> Option<usize> {
        self.entries.binary_search_by(|e| e.index.cmp(&index)).ok()
    }

    pub fn alphas(&self) -> Vec<Complex> {
        self.entries.iter().map(|e| e.alpha).collect()
    }

    /// `psi_i(points[p])` as `values[i][p]`.
    pub fn sample(&self, points: &[[f64; 2]]) -> Result<Vec<Vec<f64>>> {
        // Entries are sorted by m, so each m occupies one contiguous run.
        let mut groups: Vec<(usize, std::ops::Range<usize>, usize)> = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            match groups.last_mut() {
                Some((m, range, len)) if *m == e.index.m => {
                    range.end = i + 1;
                    *len = (*len).max(e.coeffs.beta.len());
                }
                _ => groups.push((e.index.m, i..i + 1, e.coeffs.beta.len())),
            }
        }
        let mut out = vec![vec![0.0; points.len()]; self.entries.len()];
        let mut p = Vec::new();
        for (pi, &[x, y]) in points.iter().enumerate() {
            let r = radial::disk_radius(x, y)?;
            let eta = 2.0 * r * r - 1.0;
            let theta = y.atan2(x);
            for (m, range, len) in &groups {
                p.clear();
                fill_jacobi(*m, eta, *len, &mut p);
                let rm = r.powi(*m as i32);
                let (y1, y2) = (angular_factor(*m, 1, theta), angular_factor(*m, 2, theta));
                for i in range.clone() {
                    let e = &self.entries[i];
                    let rad = rm * radial::dot(&e.coeffs.beta, &p[..e.coeffs.beta.len()]);
                    out[i][pi] = rad * if e.index.l == 1 { y1 } else { y2 };
                }
            }
        }
        Ok(out)
    }

    /// Writes the text cache format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "PSWF c={:.16e} eta={:.16e} count={}", self.c, self.eta, self.entries.len())?;
        for e in &self.entries {
            writeln!(
                w,
                "{} {} {} {:.16e} {:.16e} {:.16e} {}",
                e.index.m,
                e.index.n,
                e.index.l,
                e.chi,
                e.alpha.re,
                e.alpha.im,
                e.coeffs.j_max()
            )?;
            let line: Vec<String> = e.coeffs.beta.iter().map(|b| format!("{b:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::parse("empty basis file"))??;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("PSWF") {
            return Err(Error::parse(format!("bad basis header `{header}`")));
        }
        let c: f64 = header_value(fields.next(), "c")?;
        let eta: f64 = header_value(fields.next(), "eta")?;
        let count: usize = header_value(fields.next(), "count")?;

        let mut entries: Vec<BasisEntry> = Vec::with_capacity(count);
        for _ in 0..count {
            let meta = lines.next().ok_or_else(|| Error::parse("truncated basis file"))??;
            let t: Vec<&str> = meta.split_whitespace().collect();
            if t.len() != 7 {
                return Err(Error::parse(format!("bad basis entry `{meta}`")));
            }
            let index = PswfIndex::new(parse(t[0])?, parse(t[1])?, parse(t[2])?)?;
            let chi: f64 = parse(t[3])?;
            let alpha = Complex::new(parse(t[4])?, parse(t[5])?);
            let j_max: usize = parse(t[6])?;
            let beta_line = lines.next().ok_or_else(|| Error::parse("missing coefficients"))??;
            let beta = beta_line.split_whitespace().map(parse).collect::<Result<Vec<f64>>>()?;
            if beta.len() != j_max + 1 {
                return Err(Error::parse(format!(
                    "entry {index} declares j_max {j_max} but has {} coefficients",
                    beta.len()
                )));
            }
            let coeffs = RadialCoefficients { m: index.m, n: index.n, beta };
            let coeffs = match entries.last() {
                Some(prev) if prev.index.m == index.m && prev.index.n == index.n && *prev.coeffs == coeffs => {
                    Arc::clone(&prev.coeffs)
                }
                _ => Arc::new(coeffs),
            };
            if let Some(prev) = entries.last() {
                if prev.index >= index {
                    return Err(Error::parse(format!("entries out of order at {index}")));
                }
            }
            entries.push(BasisEntry { index, chi, alpha, coeffs });
        }
        Ok(Self { c, eta, entries })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(format!("cannot parse `{s}`")))
}

fn header_value<T: std::str::FromStr>(field: Option<&str>, key: &str) -> Result<T> {
    let field = field.ok_or_else(|| Error::parse(format!("missing `{key}=` in header")))?;
    let value = field
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| Error::parse(format!("expected `{key}=`, got `{field}`")))?;
    parse(value)
}
