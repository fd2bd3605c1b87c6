//! Phantoms, data synthesis and end-to-end experiment runs.

mod config;
mod render;

pub use config::{parse_key_values, ExperimentConfig, KEYS};
pub use render::{parse_pgm, render_field_pgm, RENDER_SIZE};

use crate::data::{add_noise, process_far_field, BasisLayout, CoefficientVector, NoiseSpec, Projector};
use crate::pswf::{build_basis, PswfBasis, SpectralCutoff};
use crate::reconstruction::{
    enkf_iterate, expand_coefficients, inverse_born, sample_initial_ensemble, NonlinearForward, ResidualHistory,
};
use crate::scattering::{full_far_field, ContrastField, DirectionSet, FarFieldMatrix, GmresOptions, GridSpec, SolveMethod};
use crate::{Complex, Error, Result};
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Closed axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::invalid(format!("empty rectangle [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    /// Euclidean distance between two rectangles (zero if they touch).
    pub fn gap(&self, other: &Rect) -> f64 {
        let dx = (other.x0 - self.x1).max(self.x0 - other.x1).max(0.0);
        let dy = (other.y0 - self.y1).max(self.y0 - other.y1).max(0.0);
        dx.hypot(dy)
    }

    fn in_unit_disk(&self) -> bool {
        [(self.x0, self.y0), (self.x0, self.y1), (self.x1, self.y0), (self.x1, self.y1)]
            .iter()
            .all(|(x, y)| x * x + y * y <= 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSpec {
    /// Union of `[-a, a] x [-b, b]` and its transpose.
    Cross2d { half_length: f64, half_width: f64, amplitude: Complex },
    /// Disjoint rectangles with a common amplitude.
    ThreeRects { rects: Vec<Rect>, amplitude: Complex },
    Disk { radius: f64, amplitude: Complex },
}

impl PhantomSpec {
    pub fn cross2d() -> Self {
        Self::Cross2d { half_length: 0.5, half_width: 0.15, amplitude: Complex::new(1.0, 0.5) }
    }

    /// Three rectangles whose smallest pairwise gap is 0.05.
    pub fn three_rects() -> Self {
        let rects = vec![
            Rect { x0: -0.55, x1: -0.05, y0: -0.1, y1: 0.4 },
            Rect { x0: 0.0, x1: 0.3, y0: -0.1, y1: 0.4 },
            Rect { x0: -0.4, x1: 0.2, y0: -0.55, y1: -0.25 },
        ];
        Self::ThreeRects { rects, amplitude: Complex::new(1.0, 0.0) }
    }

    pub fn disk(radius: f64, amplitude: Complex) -> Self {
        Self::Disk { radius, amplitude }
    }

    pub fn amplitude(&self) -> Complex {
        match self {
            Self::Cross2d { amplitude, .. } | Self::ThreeRects { amplitude, .. } | Self::Disk { amplitude, .. } => {
                *amplitude
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.amplitude();
        if !(a.re.is_finite() && a.im.is_finite()) || a.im < 0.0 || !(1.0 + a.re > 0.0) {
            return Err(Error::invalid(format!("amplitude {a} is not admissible")));
        }
        match self {
            Self::Cross2d { half_length, half_width, .. } => {
                if !(*half_length > 0.0 && *half_width > 0.0) {
                    return Err(Error::invalid("cross arms need positive extents"));
                }
                if half_length.hypot(*half_width) > 1.0 {
                    return Err(Error::invalid("cross escapes the unit disk"));
                }
            }
            Self::ThreeRects { rects, .. } => {
                if rects.is_empty() {
                    return Err(Error::invalid("no rectangles given"));
                }
                for (i, r) in rects.iter().enumerate() {
                    Rect::new(r.x0, r.x1, r.y0, r.y1)?;
                    if !r.in_unit_disk() {
                        return Err(Error::invalid(format!("rectangle {i} escapes the unit disk")));
                    }
                    if rects[..i].iter().any(|o| o.gap(r) == 0.0) {
                        return Err(Error::invalid(format!("rectangle {i} touches another one")));
                    }
                }
            }
            Self::Disk { radius, .. } => {
                if !(*radius > 0.0 && *radius <= 1.0) {
                    return Err(Error::invalid(format!("disk radius must lie in (0, 1], got {radius}")));
                }
            }
        }
        Ok(())
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Self::Cross2d { half_length: a, half_width: b, .. } => {
                (x.abs() <= *a && y.abs() <= *b) || (x.abs() <= *b && y.abs() <= *a)
            }
            Self::ThreeRects { rects, .. } => rects.iter().any(|r| r.contains(x, y)),
            Self::Disk { radius, .. } => x * x + y * y <= radius * radius,
        }
    }
}

/// Samples the phantom at the cell centers.
pub fn make_phantom(spec: &PhantomSpec, grid: &GridSpec) -> Result<ContrastField> {
    spec.validate()?;
    let a = spec.amplitude();
    let zero = Complex::new(0.0, 0.0);
    Ok(ContrastField::from_fn(grid.clone(), |x, y| if spec.contains(x, y) { a } else { zero }))
}

/// Full-model far field on the synthesis grid. Synthesizing on a grid that
/// is not strictly finer than the inversion grid is refused unless
/// `allow_inverse_crime` is set.
pub fn synth_data(
    spec: &PhantomSpec,
    k: f64,
    directions: usize,
    synth: &GridSpec,
    invert: &GridSpec,
    allow_inverse_crime: bool,
) -> Result<FarFieldMatrix> {
    if !allow_inverse_crime && !(synth.cell_width() < invert.cell_width()) {
        return Err(Error::InverseCrime(format!(
            "synthesis cell width {} is not finer than the inversion cell width {}",
            synth.cell_width(),
            invert.cell_width()
        )));
    }
    let q = make_phantom(spec, synth)?;
    full_far_field(&q, k, &DirectionSet::new(directions)?)
}

/// `<q, psi>` by the midpoint rule on the grid of `q`.
pub fn project_contrast(q: &ContrastField, basis: &PswfBasis) -> Result<CoefficientVector> {
    let grid = q.grid();
    let cells: Vec<usize> = (0..grid.len()).filter(|&p| q.values()[p] != Complex::new(0.0, 0.0)).collect();
    let points: Vec<[f64; 2]> = cells.iter().map(|&p| grid.center(p)).collect();
    let samples = basis.sample(&points)?;
    let area = grid.cell_area();
    let coeffs: Vec<Complex> = samples
        .iter()
        .map(|row| cells.iter().zip(row).map(|(&p, s)| q.values()[p] * (s * area)).sum())
        .collect();
    Ok(CoefficientVector::from_complex(BasisLayout::of(basis), &coeffs))
}

/// What a run produced and where it was written.
#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub basis_size: usize,
    pub data: CoefficientVector,
    pub inverse_born: CoefficientVector,
    pub solution: Option<CoefficientVector>,
    pub history: Option<ResidualHistory>,
    /// `J_eta` projection of the phantom when the truth is known.
    pub truth: Option<CoefficientVector>,
    pub inverse_born_error: Option<f64>,
    pub final_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    InverseBorn,
    Enkf,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage { stage: name, source: Box::new(other) },
    })
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, data)?;
        self.files.push(path);
        Ok(())
    }

    fn with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(fs::File::create(&path)?);
        f(&mut w)?;
        std::io::Write::flush(&mut w)?;
        self.files.push(path);
        Ok(())
    }
}

fn manifest(cfg: &ExperimentConfig, status: &str) -> String {
    format!("# run manifest; reproduce with --config on this file\n{}# status = {status}\n", cfg.to_text())
}

/// Synthesizes data for the configured phantom and runs the whole pipeline.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<OutputBundle> {
    fs::create_dir_all(out)?;
    let result = (|| {
        cfg.validate()?;
        let invert = GridSpec::unit(cfg.grid_invert)?;
        let synth = GridSpec::unit(cfg.grid_synth)?;
        let clean = stage(
            "synth",
            synth_data(&cfg.phantom, cfg.k, cfg.directions, &synth, &invert, cfg.allow_inverse_crime),
        )?;
        let noisy = stage("noise", add_noise(&clean, NoiseSpec::new(cfg.enkf.delta, cfg.enkf.seed)?))?;
        let truth = stage("synth", make_phantom(&cfg.phantom, &synth))?;
        run_on_data(cfg, &noisy, Some(&truth), RunMode::Enkf, out)
    })();
    if let Err(e) = &result {
        fs::write(out.join("manifest.txt"), manifest(cfg, &format!("failed: {e}")))?;
    }
    result
}

/// Runs the pipeline from a far-field matrix. `truth` is only used for
/// error reporting and images.
pub fn run_on_data(
    cfg: &ExperimentConfig,
    far_field: &FarFieldMatrix,
    truth: Option<&ContrastField>,
    mode: RunMode,
    out: &Path,
) -> Result<OutputBundle> {
    fs::create_dir_all(out)?;
    let result = run_inner(cfg, far_field, truth, mode, out);
    let status = match &result {
        Ok(_) => "complete".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    fs::write(out.join("manifest.txt"), manifest(cfg, &status))?;
    result.map(|mut b| {
        b.files.push(out.join("manifest.txt"));
        b
    })
}

fn run_inner(
    cfg: &ExperimentConfig,
    far_field: &FarFieldMatrix,
    truth: Option<&ContrastField>,
    mode: RunMode,
    out: &Path,
) -> Result<OutputBundle> {
    cfg.validate()?;
    let mut w = Writer { dir: out.to_path_buf(), files: Vec::new() };
    let c = 2.0 * cfg.k;
    let basis = stage("basis", build_basis(c, SpectralCutoff::new(cfg.eta_fraction)?))?;
    if basis.is_empty() {
        return Err(Error::Stage { stage: "basis", source: Box::new(Error::invalid("the cutoff leaves no modes")) });
    }
    w.with("basis_summary.txt", |f| write_basis_summary(&basis, f))?;

    let processed = stage("process", process_far_field(far_field, cfg.k))?;
    let projector = stage("project", Projector::new(&basis, far_field.directions))?;
    let data = stage("project", projector.project(&processed))?;
    w.with("data.coeff", |f| data.write_to(f))?;
    let q0 = stage("inverse_born", inverse_born(&data, &basis))?;
    w.with("inverse_born.coeff", |f| q0.write_to(f))?;

    let truth_coeffs = match truth {
        Some(q) => Some(stage("truth", project_contrast(q, &basis))?),
        None => None,
    };
    if let Some(t) = &truth_coeffs {
        w.with("truth.coeff", |f| t.write_to(f))?;
    }
    let inverse_born_error = truth_coeffs.as_ref().map(|t| q0.relative_error(t));

    let (solution, history, means) = match mode {
        RunMode::InverseBorn => (None, None, Vec::new()),
        RunMode::Enkf => {
            let ensemble = stage("ensemble", sample_initial_ensemble(&q0, &cfg.enkf, &basis))?;
            let method = SolveMethod::Iterative(GmresOptions { tolerance: cfg.gmres_tol, ..NonlinearForward::default_gmres() });
            let forward = stage(
                "enkf",
                NonlinearForward::new(&basis, GridSpec::unit(cfg.grid_invert)?, far_field.directions, method),
            )?;
            let outcome = stage("enkf", enkf_iterate(ensemble, |q| forward.evaluate(q), &data, &cfg.enkf))?;
            w.with("solution.coeff", |f| outcome.solution.write_to(f))?;
            w.with("residuals.csv", |f| outcome.history.write_csv(f))?;
            (Some(outcome.solution), Some(outcome.history), outcome.means)
        }
    };
    let final_error = match (&solution, &truth_coeffs) {
        (Some(s), Some(t)) => Some(s.relative_error(t)),
        _ => None,
    };

    // Images share one value range per component so they compare directly.
    let render = GridSpec::unit(RENDER_SIZE)?;
    let mut fields: Vec<(String, Vec<Complex>)> = Vec::new();
    if truth.is_some() {
        let q = stage("render", make_phantom(&cfg.phantom, &render))?;
        fields.push(("truth".into(), q.values().to_vec()));
    }
    fields.push(("inverse_born".into(), stage("render", expand_coefficients(&q0, &basis, &render))?));
    for (j, m) in means.iter().enumerate() {
        fields.push((format!("iter_{:02}", j + 1), stage("render", expand_coefficients(m, &basis, &render))?));
    }
    if let Some(s) = &solution {
        fields.push(("solution".into(), stage("render", expand_coefficients(s, &basis, &render))?));
    }
    for (part, get) in [("re", (|z: &Complex| z.re) as fn(&Complex) -> f64), ("im", |z: &Complex| z.im)] {
        let (lo, hi) = fields
            .iter()
            .flat_map(|(_, v)| v.iter().map(get))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        for (name, v) in &fields {
            let n = RENDER_SIZE;
            // Row 0 of the image is the top edge, y = 1.
            let img: Vec<f64> = (0..n * n).map(|i| get(&v[(n - 1 - i / n) * n + i % n])).collect();
            let bytes = stage("render", render_field_pgm(&img, n, n, (lo, hi)))?;
            w.bytes(&format!("{name}_{part}.pgm"), &bytes)?;
        }
    }

    w.with("summary.txt", |f| {
        use std::io::Write;
        writeln!(f, "basis_size = {}", basis.len())?;
        writeln!(f, "eta = {:.16e}", basis.eta())?;
        if let Some(e) = inverse_born_error {
            writeln!(f, "inverse_born_error = {e:.16e}")?;
        }
        if let Some(e) = final_error {
            writeln!(f, "final_error = {e:.16e}")?;
        }
        if let Some(h) = &history {
            writeln!(f, "iterations = {}", h.len())?;
            if let Some(r) = h.initial_residual {
                writeln!(f, "initial_residual = {r:.16e}")?;
            }
            if let Some(s) = h.stop {
                writeln!(f, "stop_reason = {s}")?;
            }
        }
        Ok(())
    })?;

    Ok(OutputBundle {
        dir: out.to_path_buf(),
        files: w.files,
        basis_size: basis.len(),
        data,
        inverse_born: q0,
        solution,
        history,
        truth: truth_coeffs,
        inverse_born_error,
        final_error,
    })
}

/// `m n l chi |alpha| arg(alpha)` per mode.
pub fn write_basis_summary<W: std::io::Write>(basis: &PswfBasis, mut w: W) -> Result<()> {
    writeln!(w, "# c = {:.16e} eta = {:.16e} modes = {}", basis.c(), basis.eta(), basis.len())?;
    writeln!(w, "# m n l chi abs_alpha arg_alpha")?;
    for e in basis.entries() {
        let i = e.index;
        writeln!(w, "{} {} {} {:.16e} {:.16e} {:.16e}", i.m, i.n, i.l, e.chi, e.alpha.norm(), e.alpha.arg())?;
    }
    Ok(())
}
