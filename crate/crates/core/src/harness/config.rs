//! `key = value` experiment configuration.

use super::{PhantomSpec, Rect};
use crate::reconstruction::EnkfConfig;
use crate::{Complex, Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub phantom: PhantomSpec,
    pub k: f64,
    /// Number of incident and observation directions.
    pub directions: usize,
    pub eta_fraction: f64,
    pub enkf: EnkfConfig,
    /// Cells per side of the inversion grid on `[-1, 1]^2`.
    pub grid_invert: usize,
    /// Cells per side of the synthesis grid; must be strictly finer.
    pub grid_synth: usize,
    pub allow_inverse_crime: bool,
    /// GMRES tolerance of the ensemble forward solves.
    pub gmres_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phantom: PhantomSpec::cross2d(),
            k: 10.0,
            directions: 64,
            eta_fraction: 0.9,
            enkf: EnkfConfig::default(),
            grid_invert: 50,
            grid_synth: 96,
            allow_inverse_crime: false,
            gmres_tol: 1e-8,
        }
    }
}

/// Keys understood by [`ExperimentConfig::set`].
pub const KEYS: &[&str] = &[
    "M",
    "N_e",
    "s",
    "theta",
    "gamma_strategy",
    "covariance",
    "delta",
    "c0",
    "stagnation_tol",
    "seed",
    "eta_fraction",
    "k",
    "N",
    "grid_invert",
    "grid_synth",
    "allow_inverse_crime",
    "gmres_tol",
    "phantom",
    "amplitude",
    "cross_half_length",
    "cross_half_width",
    "disk_radius",
    "rects",
];

fn value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::parse(format!("bad value `{v}` for `{key}`")))
}

/// `re im`.
fn complex(key: &str, v: &str) -> Result<Complex> {
    let t: Vec<&str> = v.split_whitespace().collect();
    match t.as_slice() {
        [re] => Ok(Complex::new(value(key, re)?, 0.0)),
        [re, im] => Ok(Complex::new(value(key, re)?, value(key, im)?)),
        _ => Err(Error::parse(format!("`{key}` expects `re [im]`, got `{v}`"))),
    }
}

/// `x0 x1 y0 y1` rectangles separated by `;`.
fn rects(v: &str) -> Result<Vec<Rect>> {
    v.split(';')
        .map(|r| {
            let t: Vec<f64> = r.split_whitespace().map(|x| value("rects", x)).collect::<Result<_>>()?;
            match t.as_slice() {
                &[x0, x1, y0, y1] => Rect::new(x0, x1, y0, y1),
                _ => Err(Error::parse(format!("rectangle `{r}` needs four numbers"))),
            }
        })
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("line {}: expected `key = value`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Applies one key. Phantom geometry keys apply to the current kind, so
    /// `phantom` must come first.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let e = &mut self.enkf;
        match key {
            "M" => e.ensemble_size = value(key, v)?,
            "N_e" => e.max_iterations = value(key, v)?,
            "s" => e.s = value(key, v)?,
            "theta" => e.theta = value(key, v)?,
            "gamma_strategy" => e.gamma = v.parse()?,
            "covariance" => e.covariance = v.parse()?,
            "delta" => e.delta = value(key, v)?,
            "c0" => e.c0 = value(key, v)?,
            "stagnation_tol" => e.stagnation_tol = value(key, v)?,
            "seed" => e.seed = value(key, v)?,
            "eta_fraction" => self.eta_fraction = value(key, v)?,
            "k" => self.k = value(key, v)?,
            "N" => self.directions = value(key, v)?,
            "grid_invert" => self.grid_invert = value(key, v)?,
            "grid_synth" => self.grid_synth = value(key, v)?,
            "allow_inverse_crime" => self.allow_inverse_crime = value(key, v)?,
            "gmres_tol" => self.gmres_tol = value(key, v)?,
            "phantom" => {
                self.phantom = match v {
                    "cross2d" => PhantomSpec::cross2d(),
                    "three_rects" => PhantomSpec::three_rects(),
                    "disk" => PhantomSpec::disk(0.3, Complex::new(1.0, 0.0)),
                    _ => return Err(Error::parse(format!("unknown phantom `{v}`"))),
                }
            }
            "amplitude" => {
                let a = complex(key, v)?;
                match &mut self.phantom {
                    PhantomSpec::Cross2d { amplitude, .. }
                    | PhantomSpec::ThreeRects { amplitude, .. }
                    | PhantomSpec::Disk { amplitude, .. } => *amplitude = a,
                }
            }
            "cross_half_length" | "cross_half_width" => match &mut self.phantom {
                PhantomSpec::Cross2d { half_length, half_width, .. } => {
                    let x = value(key, v)?;
                    if key == "cross_half_length" {
                        *half_length = x;
                    } else {
                        *half_width = x;
                    }
                }
                _ => return Err(Error::parse(format!("`{key}` only applies to cross2d"))),
            },
            "disk_radius" => match &mut self.phantom {
                PhantomSpec::Disk { radius, .. } => *radius = value(key, v)?,
                _ => return Err(Error::parse("`disk_radius` only applies to disk")),
            },
            "rects" => match &mut self.phantom {
                PhantomSpec::ThreeRects { rects: r, .. } => *r = rects(v)?,
                _ => return Err(Error::parse("`rects` only applies to three_rects")),
            },
            _ => return Err(Error::parse(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.enkf.validate()?;
        self.phantom.validate()?;
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::invalid(format!("k must be positive, got {}", self.k)));
        }
        if self.directions < 2 || self.directions % 2 != 0 {
            return Err(Error::invalid(format!("N must be even and at least 2, got {}", self.directions)));
        }
        if !(self.eta_fraction > 0.0 && self.eta_fraction < 1.0) {
            return Err(Error::invalid(format!("eta_fraction must lie in (0, 1), got {}", self.eta_fraction)));
        }
        if self.grid_invert == 0 || self.grid_synth == 0 {
            return Err(Error::invalid("grids need at least one cell"));
        }
        if !(self.gmres_tol > 0.0 && self.gmres_tol < 1.0) {
            return Err(Error::invalid(format!("gmres_tol must lie in (0, 1), got {}", self.gmres_tol)));
        }
        Ok(())
    }

    /// Round-trippable `key = value` text; floats use the shortest exact
    /// representation.
    pub fn to_text(&self) -> String {
        let e = &self.enkf;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.phantom {
            PhantomSpec::Cross2d { half_length, half_width, amplitude } => {
                put("phantom", "cross2d".into());
                put("amplitude", format!("{} {}", amplitude.re, amplitude.im));
                put("cross_half_length", half_length.to_string());
                put("cross_half_width", half_width.to_string());
            }
            PhantomSpec::ThreeRects { rects, amplitude } => {
                put("phantom", "three_rects".into());
                put("amplitude", format!("{} {}", amplitude.re, amplitude.im));
                let r: Vec<String> = rects.iter().map(|r| format!("{} {} {} {}", r.x0, r.x1, r.y0, r.y1)).collect();
                put("rects", r.join("; "));
            }
            PhantomSpec::Disk { radius, amplitude } => {
                put("phantom", "disk".into());
                put("amplitude", format!("{} {}", amplitude.re, amplitude.im));
                put("disk_radius", radius.to_string());
            }
        }
        put("k", self.k.to_string());
        put("N", self.directions.to_string());
        put("eta_fraction", self.eta_fraction.to_string());
        put("grid_invert", self.grid_invert.to_string());
        put("grid_synth", self.grid_synth.to_string());
        put("allow_inverse_crime", self.allow_inverse_crime.to_string());
        put("gmres_tol", self.gmres_tol.to_string());
        put("M", e.ensemble_size.to_string());
        put("N_e", e.max_iterations.to_string());
        put("s", e.s.to_string());
        put("theta", e.theta.to_string());
        put("gamma_strategy", e.gamma.to_string());
        put("covariance", e.covariance.to_string());
        put("delta", e.delta.to_string());
        put("c0", e.c0.to_string());
        put("stagnation_tol", e.stagnation_tol.to_string());
        put("seed", e.seed.to_string());
        s
    }

    /// Overrides as `(key, value)` pairs; `phantom` is applied first.
    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<()> {
        let mut ordered: BTreeMap<bool, Vec<&(String, String)>> = BTreeMap::new();
        for kv in overrides {
            ordered.entry(kv.0 != "phantom").or_default().push(kv);
        }
        for (k, v) in ordered.into_values().flatten() {
            self.set(k, v)?;
        }
        Ok(())
    }
}
