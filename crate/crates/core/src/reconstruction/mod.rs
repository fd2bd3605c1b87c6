//! Inverse Born initial guess and the low-rank ensemble Kalman filter.
//!
//! Everything operates on stacked real coefficient vectors
//! `(Re q_1, Im q_1, Re q_2, ...)` so the Kalman algebra is real.

mod forward;

pub use forward::{expand_coefficients, NonlinearForward};

use crate::data::{BasisLayout, CoefficientVector};
use crate::numerics::{symmetric_eigenvalues, Cholesky};
use crate::pswf::{PswfBasis, PswfIndex};
use crate::{Complex, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

/// Choice of the Kalman regularization `gamma_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaStrategy {
    FixedOne,
    /// `0.9 |lambda_j|`.
    Conservative,
    /// `max(0.01, delta) |lambda_j|`.
    NoiseAware,
}

impl FromStr for GammaStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_one" => Ok(Self::FixedOne),
            "conservative" => Ok(Self::Conservative),
            "noise_aware" => Ok(Self::NoiseAware),
            _ => Err(Error::parse(format!("unknown gamma strategy `{s}`"))),
        }
    }
}

impl fmt::Display for GammaStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FixedOne => "fixed_one",
            Self::Conservative => "conservative",
            Self::NoiseAware => "noise_aware",
        })
    }
}

/// Prior covariance of the initial ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceForm {
    /// Standard deviation `sqrt(theta) (m + 2n + 2)^(-s)` per real component.
    ModeIndex,
    /// Variance `theta chi^(-s)` per real component.
    SturmLiouville,
}

impl FromStr for CovarianceForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode_index" => Ok(Self::ModeIndex),
            "sturm_liouville" => Ok(Self::SturmLiouville),
            _ => Err(Error::parse(format!("unknown covariance form `{s}`"))),
        }
    }
}

impl fmt::Display for CovarianceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ModeIndex => "mode_index",
            Self::SturmLiouville => "sturm_liouville",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnkfConfig {
    /// Ensemble size `M`.
    pub ensemble_size: usize,
    /// Maximum number of iterations `N_e`.
    pub max_iterations: usize,
    /// Covariance decay exponent.
    pub s: f64,
    /// Covariance scale.
    pub theta: f64,
    pub gamma: GammaStrategy,
    /// Relative noise level assumed by the stopping rule and `noise_aware`.
    /// Zero disables the discrepancy rule.
    pub delta: f64,
    pub c0: f64,
    /// Minimum relative residual decrease per iteration. Zero disables the
    /// stagnation rule.
    pub stagnation_tol: f64,
    pub seed: u64,
    pub covariance: CovarianceForm,
}

impl Default for EnkfConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 100,
            max_iterations: 20,
            s: 2.5,
            theta: 1.0,
            gamma: GammaStrategy::NoiseAware,
            delta: 0.03,
            c0: 2.0,
            stagnation_tol: 0.01,
            seed: 0,
            covariance: CovarianceForm::ModeIndex,
        }
    }
}

impl EnkfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("N_e must be at least 1"));
        }
        if !(self.s > 1.0) || !self.s.is_finite() {
            return Err(Error::invalid(format!("covariance exponent must exceed 1, got {}", self.s)));
        }
        // theta = 0 is accepted: it collapses the ensemble onto q0.
        if !(self.theta >= 0.0) || !self.theta.is_finite() {
            return Err(Error::invalid(format!("theta must be non-negative, got {}", self.theta)));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be non-negative, got {}", self.delta)));
        }
        if !(self.c0 > 1.0) || !self.c0.is_finite() {
            return Err(Error::invalid(format!("c0 must exceed 1, got {}", self.c0)));
        }
        if !(self.stagnation_tol >= 0.0) {
            return Err(Error::invalid(format!("stagnation tolerance must be non-negative, got {}", self.stagnation_tol)));
        }
        Ok(())
    }

    /// Prior variance of each real component of mode `entry`.
    pub fn prior_variance(&self, index: PswfIndex, chi: f64) -> f64 {
        match self.covariance {
            CovarianceForm::ModeIndex => {
                self.theta * ((index.m + 2 * index.n + 2) as f64).powf(-2.0 * self.s)
            }
            CovarianceForm::SturmLiouville => self.theta * chi.powf(-self.s),
        }
    }
}

/// `M` coefficient vectors in one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    layout: Arc<BasisLayout>,
    members: Vec<Vec<f64>>,
}

impl Ensemble {
    pub fn new(layout: Arc<BasisLayout>, members: Vec<Vec<f64>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("an ensemble needs at least one member"));
        }
        let d = 2 * layout.indices.len();
        if let Some(bad) = members.iter().position(|m| m.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "member {bad} has {} values, expected {d}",
                members[bad].len()
            )));
        }
        Ok(Self { layout, members })
    }

    pub fn layout(&self) -> &Arc<BasisLayout> {
        &self.layout
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        2 * self.layout.indices.len()
    }

    pub fn member(&self, j: usize) -> CoefficientVector {
        CoefficientVector::new(Arc::clone(&self.layout), self.members[j].clone()).expect("checked on construction")
    }

    pub fn mean(&self) -> CoefficientVector {
        CoefficientVector::new(Arc::clone(&self.layout), mean_of(&self.members)).expect("checked on construction")
    }
}

fn mean_of(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    let inv = 1.0 / vs.len() as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Discrepancy,
    Stagnation,
    MaxIter,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Discrepancy => "discrepancy",
            Self::Stagnation => "stagnation",
            Self::MaxIter => "max_iter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Relative data residual of the ensemble mean after the update.
    pub residual: f64,
    pub gamma: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualHistory {
    /// Relative residual of the initial ensemble mean.
    pub initial_residual: Option<f64>,
    pub records: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
}

impl ResidualHistory {
    pub fn from_residuals(residuals: &[f64]) -> Self {
        let records = residuals.iter().map(|&residual| IterationRecord { residual, gamma: 1.0, lambda_max: 0.0 }).collect();
        Self { initial_residual: None, records, stop: None }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    /// `iter,residual,gamma,lambda_max,stop_reason`; the reason appears on
    /// the last row only.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,residual,gamma,lambda_max,stop_reason")?;
        let last = self.records.len();
        for (i, r) in self.records.iter().enumerate() {
            let reason = match self.stop {
                Some(s) if i + 1 == last => s.to_string(),
                _ => String::new(),
            };
            writeln!(w, "{},{:.16e},{:.16e},{:.16e},{reason}", i + 1, r.residual, r.gamma, r.lambda_max)?;
        }
        Ok(())
    }
}

/// `q = sum alpha^-1 <u, psi> psi` over the basis.
pub fn inverse_born(u: &CoefficientVector, basis: &PswfBasis) -> Result<CoefficientVector> {
    if basis.is_empty() {
        return Err(Error::invalid("inverse Born needs a nonempty basis"));
    }
    u.check_basis(basis)?;
    let q: Vec<Complex> = u.to_complex().iter().zip(basis.entries()).map(|(z, e)| z / e.alpha).collect();
    Ok(CoefficientVector::from_complex(Arc::clone(u.layout()), &q))
}

/// Karhunen-Loeve samples around `q0`. Member `j` draws from ChaCha stream
/// `j + 1` of `cfg.seed`; stream 0 is left to the data noise.
pub fn sample_initial_ensemble(q0: &CoefficientVector, cfg: &EnkfConfig, basis: &PswfBasis) -> Result<Ensemble> {
    cfg.validate()?;
    q0.check_basis(basis)?;
    let std: Vec<f64> = basis
        .entries()
        .iter()
        .flat_map(|e| {
            let sd = cfg.prior_variance(e.index, e.chi).sqrt();
            [sd, sd]
        })
        .collect();
    let members = (0..cfg.ensemble_size)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(j as u64 + 1);
            q0.values()
                .iter()
                .zip(&std)
                .map(|(q, sd)| {
                    let xi: f64 = StandardNormal.sample(&mut rng);
                    q + sd * xi
                })
                .collect()
        })
        .collect();
    Ensemble::new(Arc::clone(q0.layout()), members)
}

/// Largest eigenvalue magnitude of a symmetric `d x d` matrix.
pub fn largest_eigenvalue_magnitude(t_ww: &[f64], d: usize) -> Result<f64> {
    let ev = symmetric_eigenvalues(t_ww, d)?;
    Ok(ev.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// `gamma_j` for a data covariance `T_ww`.
pub fn regularization_gamma(strategy: GammaStrategy, t_ww: &[f64], d: usize, delta: f64) -> Result<f64> {
    gamma_with_lambda(strategy, t_ww, d, delta).map(|(g, _)| g)
}

fn gamma_with_lambda(strategy: GammaStrategy, t_ww: &[f64], d: usize, delta: f64) -> Result<(f64, f64)> {
    let lambda = largest_eigenvalue_magnitude(t_ww, d)?;
    let gamma = match strategy {
        GammaStrategy::FixedOne => 1.0,
        GammaStrategy::Conservative => 0.9 * lambda,
        GammaStrategy::NoiseAware => delta.max(0.01) * lambda,
    };
    // A collapsed ensemble has T_ww = 0.
    let gamma = if gamma > 0.0 { gamma } else { 1.0 };
    Ok((gamma, lambda))
}

pub fn stopping_check(history: &ResidualHistory, cfg: &EnkfConfig) -> StopDecision {
    let r = history.residuals();
    let Some(&latest) = r.last() else {
        return StopDecision::Continue;
    };
    if latest < cfg.c0 * cfg.delta {
        return StopDecision::Stop(StopReason::Discrepancy);
    }
    if cfg.stagnation_tol > 0.0 && r.len() >= 2 {
        let prev = r[r.len() - 2];
        if prev > 0.0 && (prev - latest) / prev < cfg.stagnation_tol {
            return StopDecision::Stop(StopReason::Stagnation);
        }
    }
    if r.len() >= cfg.max_iterations {
        return StopDecision::Stop(StopReason::MaxIter);
    }
    StopDecision::Continue
}

#[derive(Debug, Clone)]
pub struct EnkfOutcome {
    pub solution: CoefficientVector,
    pub history: ResidualHistory,
    pub ensemble: Ensemble,
    /// Ensemble mean after each iteration.
    pub means: Vec<CoefficientVector>,
}

fn relative_residual(data: &[f64], w: &[f64]) -> f64 {
    let num: f64 = data.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = data.iter().map(|a| a * a).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

fn checked(member: usize, w: Result<Vec<f64>>, d: usize) -> Result<Vec<f64>> {
    let w = w?;
    if w.len() != d {
        return Err(Error::DimensionMismatch(format!("forward map returned {} values, expected {d}", w.len())));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteForward { member });
    }
    Ok(w)
}

/// Kalman iterations with member-parallel forward evaluations. A forward
/// failure on the ensemble mean is reported as member `M`.
pub fn enkf_iterate<F>(ensemble: Ensemble, forward: F, data: &CoefficientVector, cfg: &EnkfConfig) -> Result<EnkfOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    if data.layout() != ensemble.layout() {
        return Err(Error::BasisMismatch("data and ensemble use different bases".into()));
    }
    let d = ensemble.dim();
    let m = ensemble.len();
    let layout = Arc::clone(ensemble.layout());
    let u = data.values();
    let mut members = ensemble.members;
    let mut history = ResidualHistory::default();
    let mean0 = mean_of(&members);
    history.initial_residual = Some(relative_residual(u, &checked(m, forward(&mean0), d)?));
    let mut means = Vec::new();
    loop {
        let w: Vec<Vec<f64>> = members
            .par_iter()
            .enumerate()
            .map(|(j, q)| checked(j, forward(q), d))
            .collect::<Result<_>>()?;
        let q_mean = mean_of(&members);
        let w_mean = mean_of(&w);
        let inv_m = 1.0 / m as f64;
        let mut t_qw = vec![0.0; d * d];
        let mut t_ww = vec![0.0; d * d];
        for (q, wj) in members.iter().zip(&w) {
            let dq: Vec<f64> = q.iter().zip(&q_mean).map(|(a, b)| a - b).collect();
            let dw: Vec<f64> = wj.iter().zip(&w_mean).map(|(a, b)| a - b).collect();
            for a in 0..d {
                let (qa, wa) = (dq[a] * inv_m, dw[a] * inv_m);
                let (rq, rw) = (&mut t_qw[a * d..(a + 1) * d], &mut t_ww[a * d..(a + 1) * d]);
                for b in 0..d {
                    rq[b] += qa * dw[b];
                    rw[b] += wa * dw[b];
                }
            }
        }
        let (gamma, lambda_max) = gamma_with_lambda(cfg.gamma, &t_ww, d, cfg.delta)?;
        let mut reg = t_ww;
        for a in 0..d {
            reg[a * d + a] += gamma;
        }
        let chol = Cholesky::new(&reg, d)?;
        for (q, wj) in members.iter_mut().zip(&w) {
            let r: Vec<f64> = u.iter().zip(wj).map(|(a, b)| a - b).collect();
            let z = chol.solve(&r);
            for a in 0..d {
                q[a] += t_qw[a * d..(a + 1) * d].iter().zip(&z).map(|(t, z)| t * z).sum::<f64>();
            }
        }
        let mean = mean_of(&members);
        let residual = relative_residual(u, &checked(m, forward(&mean), d)?);
        history.records.push(IterationRecord { residual, gamma, lambda_max });
        means.push(CoefficientVector::new(Arc::clone(&layout), mean)?);
        if let StopDecision::Stop(reason) = stopping_check(&history, cfg) {
            history.stop = Some(reason);
            break;
        }
    }
    let ensemble = Ensemble::new(layout, members)?;
    let solution = means.last().cloned().expect("at least one iteration");
    Ok(EnkfOutcome { solution, history, ensemble, means })
}

/// Closed-form limit of the linear iteration:
/// `dq = c conj(alpha) / (c |alpha|^2 + 1/N_e) u` per mode, from `q0 = 0`.
pub fn tikhonov_phillips_linear(u: &CoefficientVector, basis: &PswfBasis, cfg: &EnkfConfig) -> Result<CoefficientVector> {
    if basis.is_empty() {
        return Err(Error::invalid("Tikhonov-Phillips needs a nonempty basis"));
    }
    cfg.validate()?;
    u.check_basis(basis)?;
    let ne = cfg.max_iterations as f64;
    let q: Vec<Complex> = u
        .to_complex()
        .iter()
        .zip(basis.entries())
        .map(|(r, e)| {
            let c = cfg.prior_variance(e.index, e.chi);
            r * e.alpha.conj() * (c / (c * e.alpha.norm_sqr() + 1.0 / ne))
        })
        .collect();
    Ok(CoefficientVector::from_complex(Arc::clone(u.layout()), &q))
}
