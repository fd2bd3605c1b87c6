//! End-to-end acceptance checks. Runs as a plain binary so every check
//! prints one PASS/FAIL line even when others fail.

mod common;

use common::{disk_rule, largest_alpha, random_complex};
use prolate_enkf::data::{process_far_field, project_onto_basis, quadrature_weight, sample_point, CoefficientVector};
use prolate_enkf::harness::{make_phantom, run_experiment, ExperimentConfig, PhantomSpec};
use prolate_enkf::pswf::{build_basis, build_basis_above, compute_radial_eigens, leading_eigenvalue, SpectralCutoff};
use prolate_enkf::reconstruction::{
    enkf_iterate, inverse_born, sample_initial_ensemble, tikhonov_phillips_linear, EnkfConfig, GammaStrategy,
    StopReason,
};
use prolate_enkf::scattering::{born_far_field, born_mode_map, full_far_field, DirectionSet, FarFieldMatrix, GridSpec};
use prolate_enkf::{Complex, ComplexDenseMatrix};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn eigenvalue_bounds() -> Outcome {
    let mut checked = 0;
    let mut worst = f64::INFINITY;
    for c in [10.0, 20.0, 30.0] {
        let mut modes: Vec<(usize, usize, f64)> = Vec::new();
        for m in 0..=(2.0 * c) as usize {
            for mode in compute_radial_eigens(m, c, c as usize).map_err(|e| e.to_string())? {
                modes.push((m, mode.coeffs.n, mode.chi));
            }
        }
        let basis = build_basis(c, SpectralCutoff::default()).map_err(|e| e.to_string())?;
        modes.extend(basis.entries().iter().map(|e| (e.index.m, e.index.n, e.chi)));
        for (m, n, chi) in modes {
            let base = ((m + 2 * n) * (m + 2 * n + 2)) as f64;
            let margin = (chi - base).min(base + c * c - chi);
            worst = worst.min(margin);
            if !(base < chi && chi < base + c * c) {
                return Err(format!("chi_{m},{n} = {chi} outside ({base}, {}) at c = {c}", base + c * c));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} eigenvalues inside the bounds, smallest margin {worst:.3e}"))
}

fn orthonormality() -> Outcome {
    let basis = build_basis(20.0, SpectralCutoff::default()).map_err(|e| e.to_string())?;
    let (points, weights) = disk_rule(200, 256);
    let s = basis.sample(&points).map_err(|e| e.to_string())?;
    let weighted: Vec<Vec<f64>> = s.iter().map(|row| row.iter().zip(&weights).map(|(a, w)| a * w).collect()).collect();
    let mut worst = 0.0f64;
    for i in 0..s.len() {
        for j in 0..=i {
            let g: f64 = weighted[i].iter().zip(&s[j]).map(|(a, b)| a * b).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    ensure(worst < 1e-6, format!("{} modes, max |G - I| = {worst:.3e}", s.len()))
}

fn eigenfunction_property() -> Outcome {
    let c = 20.0;
    let basis = build_basis(c, SpectralCutoff::default()).map_err(|e| e.to_string())?;
    let chosen = largest_alpha(&basis, 5);
    let (ys, wy) = disk_rule(200, 256);
    let (xs, wx) = disk_rule(40, 64);
    let sy = basis.sample(&ys).map_err(|e| e.to_string())?;
    let sx = basis.sample(&xs).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut transforms = vec![vec![Complex::new(0.0, 0.0); xs.len()]; chosen.len()];
    for (a, x) in xs.iter().enumerate() {
        let kernel: Vec<Complex> =
            ys.iter().zip(&wy).map(|(y, w)| Complex::from_polar(*w, c * (x[0] * y[0] + x[1] * y[1]))).collect();
        for (t, &i) in transforms.iter_mut().zip(&chosen) {
            t[a] = kernel.iter().zip(&sy[i]).map(|(k, v)| k * v).sum();
        }
    }
    for (t, &i) in transforms.iter().zip(&chosen) {
        let alpha = basis.entries()[i].alpha;
        let (mut num, mut den) = (0.0, 0.0);
        for ((f, psi), w) in t.iter().zip(&sx[i]).zip(&wx) {
            num += w * (f - alpha * psi).norm_sqr();
            den += w * (alpha * psi).norm_sqr();
        }
        worst = worst.max((num / den).sqrt());
    }
    ensure(worst < 1e-6, format!("max relative defect over 5 leading modes {worst:.3e}"))
}

fn sum_rule() -> Outcome {
    let c = 20.0;
    let a00 = leading_eigenvalue(c).map_err(|e| e.to_string())?;
    let basis = build_basis_above(c, 1e-8 * a00).map_err(|e| e.to_string())?;
    let total: f64 = basis.alphas().iter().map(|a| a.norm_sqr()).sum();
    let ratio = total / (PI * PI);
    ensure((0.99..=1.0).contains(&ratio), format!("{} modes, sum |alpha|^2 / pi^2 = {ratio:.15}", basis.len()))
}

fn reciprocity() -> Outcome {
    let grid = GridSpec::unit(50).map_err(|e| e.to_string())?;
    let q = make_phantom(&PhantomSpec::cross2d(), &grid).map_err(|e| e.to_string())?;
    let f = full_far_field(&q, 10.0, &DirectionSet::new(64).unwrap()).map_err(|e| e.to_string())?;
    let defect = f.reciprocity_defect().map_err(|e| e.to_string())?;
    ensure(defect < 1e-3, format!("max relative reciprocity defect {defect:.3e}"))
}

fn born_limit() -> Outcome {
    let grid = GridSpec::unit(50).map_err(|e| e.to_string())?;
    let dirs = DirectionSet::new(64).unwrap();
    let mut gaps = Vec::new();
    for amp in [0.01, 0.001] {
        let q = make_phantom(&PhantomSpec::disk(0.3, Complex::new(amp, 0.0)), &grid).map_err(|e| e.to_string())?;
        let full = full_far_field(&q, 10.0, &dirs).map_err(|e| e.to_string())?;
        let born = born_far_field(&q, 10.0, &dirs, &dirs).map_err(|e| e.to_string())?;
        gaps.push(full.entries.sub(&born.entries).frobenius_norm() / full.frobenius_norm());
    }
    let ratio = gaps[0] / gaps[1];
    ensure(
        gaps[0] < 0.05 && gaps[1] < 0.005 && (5.0..=20.0).contains(&ratio),
        format!("gaps {:.3e} and {:.3e}, ratio {ratio:.2}", gaps[0], gaps[1]),
    )
}

fn weight_sum_error(n: usize) -> f64 {
    let d = DirectionSet::new(n).unwrap();
    let s: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| quadrature_weight(&d, i, j)).sum();
    (s - PI).abs() / PI
}

fn pair_quadrature() -> Outcome {
    let (e64, e256) = (weight_sum_error(64), weight_sum_error(256));
    let order = (e64 / e256).log2() / 2.0;
    ensure(
        e64 < 2e-2 && e256 < 5e-3 && order > 1.5,
        format!("relative error {e64:.3e} at N=64, {e256:.3e} at N=256, observed order {order:.2}"),
    )
}

fn inverse_born_round_trip() -> Outcome {
    let k = 10.0;
    let basis = build_basis(2.0 * k, SpectralCutoff::default()).map_err(|e| e.to_string())?;
    let q = random_complex(basis.len(), 3);
    let layout = prolate_enkf::data::BasisLayout::of(&basis);
    let truth = CoefficientVector::from_complex(layout, &q);
    // Born far field of q in closed form: k^2 sum alpha q psi((d - x)/2).
    let n = 64;
    let dirs = DirectionSet::new(n).unwrap();
    let points: Vec<[f64; 2]> = (0..n * n).map(|ij| sample_point(&dirs, ij / n, ij % n)).collect();
    let s = basis.sample(&points).map_err(|e| e.to_string())?;
    let entries = ComplexDenseMatrix::from_fn(n, n, |i, j| {
        let z: Complex = basis.entries().iter().zip(&q).zip(&s).map(|((e, qi), row)| e.alpha * qi * row[i * n + j]).sum();
        z * (k * k)
    });
    let f = FarFieldMatrix::new(dirs, k, entries).map_err(|e| e.to_string())?;
    let data = project_onto_basis(&process_far_field(&f, k).map_err(|e| e.to_string())?, &basis)
        .map_err(|e| e.to_string())?;
    let pipeline = inverse_born(&data, &basis).map_err(|e| e.to_string())?.relative_error(&truth);
    let direct = inverse_born(&born_mode_map(&truth, &basis).map_err(|e| e.to_string())?, &basis)
        .map_err(|e| e.to_string())?
        .relative_error(&truth);
    ensure(
        pipeline < 1e-2 && direct < 1e-10,
        format!("pipeline error {pipeline:.3e}, mode-map error {direct:.3e}"),
    )
}

fn lipschitz() -> Outcome {
    let basis = build_basis(20.0, SpectralCutoff::default()).map_err(|e| e.to_string())?;
    let layout = prolate_enkf::data::BasisLayout::of(&basis);
    let eta = basis.eta();
    let mut violations = 0;
    let mut worst = 0.0f64;
    for pair in 0..200u64 {
        let data = |seed| -> Result<CoefficientVector, String> {
            let q = CoefficientVector::from_complex(Arc::clone(&layout), &random_complex(basis.len(), seed));
            born_mode_map(&q, &basis).map_err(|e| e.to_string())
        };
        let (u1, u2) = (data(2 * pair)?, data(2 * pair + 1)?);
        let q1 = inverse_born(&u1, &basis).map_err(|e| e.to_string())?;
        let q2 = inverse_born(&u2, &basis).map_err(|e| e.to_string())?;
        let dq = q1.relative_error(&q2) * q2.norm();
        let du = u1.relative_error(&u2) * u2.norm();
        worst = worst.max(dq / (du / eta));
        if dq > du / eta + 1e-8 {
            violations += 1;
        }
    }
    ensure(violations == 0, format!("200 pairs, {violations} violations, max ratio to the bound {worst:.4}"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn enkf_tikhonov_limit() -> Outcome {
    let basis = build_basis(20.0, SpectralCutoff::default()).map_err(|e| e.to_string())?;
    let layout = prolate_enkf::data::BasisLayout::of(&basis);
    let base = EnkfConfig {
        max_iterations: 5,
        theta: 1e4,
        gamma: GammaStrategy::FixedOne,
        delta: 0.0,
        stagnation_tol: 0.0,
        ..EnkfConfig::default()
    };
    let zero = CoefficientVector::zeros(Arc::clone(&layout));
    let truth = sample_initial_ensemble(&zero, &EnkfConfig { ensemble_size: 1, seed: 0, ..base.clone() }, &basis)
        .map_err(|e| e.to_string())?
        .member(0);
    let u = born_mode_map(&truth, &basis).map_err(|e| e.to_string())?;
    let oracle = tikhonov_phillips_linear(&u, &basis, &base).map_err(|e| e.to_string())?;
    let forward = |q: &[f64]| -> prolate_enkf::Result<Vec<f64>> {
        let v = CoefficientVector::new(Arc::clone(&layout), q.to_vec())?;
        Ok(born_mode_map(&v, &basis)?.into_values())
    };
    let mut medians = Vec::new();
    for m in [100, 400, 1600] {
        let mut gaps = Vec::new();
        for seed in 1..=5 {
            let cfg = EnkfConfig { ensemble_size: m, seed, ..base.clone() };
            let ens = sample_initial_ensemble(&zero, &cfg, &basis).map_err(|e| e.to_string())?;
            let out = enkf_iterate(ens, forward, &u, &cfg).map_err(|e| e.to_string())?;
            gaps.push(out.solution.relative_error(&oracle));
        }
        medians.push(median(gaps));
    }
    ensure(
        medians[0] > medians[1] && medians[1] > medians[2] && medians[2] < 0.2,
        format!("median gaps {:.4} / {:.4} / {:.4} at M = 100 / 400 / 1600", medians[0], medians[1], medians[2]),
    )
}

/// Output directory of the first Cross2D run, reused by the determinism check.
static FIRST_RUN: Mutex<Option<PathBuf>> = Mutex::new(None);

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("prolate-enkf-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn cross2d_end_to_end() -> Outcome {
    let cfg = ExperimentConfig::default();
    let dir = scratch_dir("a");
    let bundle = run_experiment(&cfg, &dir).map_err(|e| e.to_string())?;
    *FIRST_RUN.lock().unwrap() = Some(dir);
    let h = bundle.history.expect("EnKF run has a history");
    let r = h.residuals();
    let list: Vec<String> = r.iter().map(|x| format!("{x:.4}")).collect();
    let ib = bundle.inverse_born_error.unwrap();
    let fin = bundle.final_error.unwrap();
    let detail = format!(
        "residuals [{}], stop {:?} after {} iterations, error {fin:.4} vs inverse Born {ib:.4}",
        list.join(", "),
        h.stop,
        r.len()
    );
    let a = r.len() >= 5 && r[4] < r[0];
    let b = matches!(h.stop, Some(StopReason::Discrepancy | StopReason::Stagnation)) && r.len() <= 10;
    let c = fin <= ib;
    ensure(a && b && c, format!("(a) {a} (b) {b} (c) {c}: {detail}"))
}

fn wave_number_scaling() -> Outcome {
    let n10 = build_basis(20.0, SpectralCutoff::new(0.9).unwrap()).map_err(|e| e.to_string())?.len();
    let n15 = build_basis(30.0, SpectralCutoff::new(0.9).unwrap()).map_err(|e| e.to_string())?.len();
    ensure(n15 > n10, format!("|J| = {n10} at k = 10, {n15} at k = 15"))
}

fn read_dir(dir: &Path) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        out.insert(entry.file_name().to_string_lossy().into_owned(), std::fs::read(entry.path())?);
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::default();
    let first = match FIRST_RUN.lock().unwrap().clone() {
        Some(d) => d,
        None => {
            let d = scratch_dir("a");
            run_experiment(&cfg, &d).map_err(|e| e.to_string())?;
            d
        }
    };
    let second = scratch_dir("b");
    run_experiment(&cfg, &second).map_err(|e| e.to_string())?;
    let (a, b) = (read_dir(&first).map_err(|e| e.to_string())?, read_dir(&second).map_err(|e| e.to_string())?);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let kinds = ["manifest.txt", "solution.coeff", "solution_re.pgm", "solution_im.pgm"];
    let present = kinds.iter().all(|k| a.contains_key(*k));
    let _ = std::fs::remove_dir_all(&first);
    let _ = std::fs::remove_dir_all(&second);
    ensure(
        present && differing.is_empty() && a.len() == b.len(),
        format!("{} files compared, {} differ {:?}", a.len(), differing.len(), differing),
    )
}

fn main() {
    let checks: [(&str, Option<u64>, fn() -> Outcome); 13] = [
        ("PSWF eigenvalue bounds", Some(10), eigenvalue_bounds),
        ("orthonormality at c = 20", Some(30), orthonormality),
        ("eigenfunction property at c = 20", Some(60), eigenfunction_property),
        ("prolate sum rule at c = 20", Some(60), sum_rule),
        ("full-solver reciprocity", Some(120), reciprocity),
        ("Born limit", Some(120), born_limit),
        ("direction-pair quadrature", None, pair_quadrature),
        ("inverse Born round trip", None, inverse_born_round_trip),
        ("Lipschitz bound", None, lipschitz),
        ("EnKF to Tikhonov-Phillips", Some(120), enkf_tikhonov_limit),
        ("end-to-end Cross2D", Some(900), cross2d_end_to_end),
        ("wave-number scaling", None, wave_number_scaling),
        ("determinism", None, determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (i, (name, limit, check)) in checks.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let over = limit.is_some_and(|l| took > Duration::from_secs(l));
        let (status, detail) = match result {
            Ok(d) if !over => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over the {} s budget", limit.unwrap())),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("[{id:02}] {status} {name}: {detail} ({:.1} s)", took.as_secs_f64());
    }
    println!("{failures} acceptance check(s) failed");
    if failures > 0 {
        std::process::exit(1);
    }
}
