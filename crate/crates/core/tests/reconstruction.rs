mod common;

use common::random_complex;
use prolate_enkf::data::{BasisLayout, CoefficientVector};
use prolate_enkf::numerics::LuFactorization;
use prolate_enkf::pswf::{build_basis, PswfBasis, SpectralCutoff};
use prolate_enkf::reconstruction::{
    enkf_iterate, inverse_born, sample_initial_ensemble, tikhonov_phillips_linear, EnkfConfig, Ensemble,
    GammaStrategy, StopReason,
};
use prolate_enkf::scattering::born_mode_map;
use prolate_enkf::{Complex, ComplexDenseMatrix, Error};
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

fn basis() -> &'static PswfBasis {
    static B: OnceLock<PswfBasis> = OnceLock::new();
    B.get_or_init(|| build_basis(10.0, SpectralCutoff::default()).unwrap())
}

fn layout() -> Arc<BasisLayout> {
    BasisLayout::of(basis())
}

fn linear(q: &[f64]) -> prolate_enkf::Result<Vec<f64>> {
    let v = CoefficientVector::new(layout(), q.to_vec())?;
    Ok(born_mode_map(&v, basis())?.into_values())
}

fn random_vector(seed: u64) -> CoefficientVector {
    CoefficientVector::from_complex(layout(), &random_complex(basis().len(), seed))
}

fn quiet(cfg: EnkfConfig) -> EnkfConfig {
    EnkfConfig { delta: 0.0, stagnation_tol: 0.0, ..cfg }
}

#[test]
fn inverse_born_of_zero_is_zero() {
    let q = inverse_born(&CoefficientVector::zeros(layout()), basis()).unwrap();
    assert!(q.values().iter().all(|&v| v == 0.0));
}

#[test]
fn inverse_born_undoes_the_mode_map() {
    let q = random_vector(1);
    let back = inverse_born(&born_mode_map(&q, basis()).unwrap(), basis()).unwrap();
    assert!(back.relative_error(&q) < 1e-14);
}

#[test]
fn theta_zero_collapses_the_ensemble() {
    let q0 = random_vector(2);
    let cfg = EnkfConfig { theta: 0.0, ensemble_size: 7, ..EnkfConfig::default() };
    let ens = sample_initial_ensemble(&q0, &cfg, basis()).unwrap();
    assert!(ens.members().iter().all(|m| m == q0.values()));
}

#[test]
fn ensemble_moments() {
    let q0 = random_vector(3);
    let m = 100_000;
    let cfg = EnkfConfig { ensemble_size: m, theta: 2.0, seed: 17, ..EnkfConfig::default() };
    let ens = sample_initial_ensemble(&q0, &cfg, basis()).unwrap();
    let mean = ens.mean();
    for (k, entry) in basis().entries().iter().enumerate() {
        let var_target = cfg.prior_variance(entry.index, entry.chi);
        for part in 0..2 {
            let a = 2 * k + part;
            let mu = mean.values()[a];
            assert!((mu - q0.values()[a]).abs() < 4.0 * var_target.sqrt() / (m as f64).sqrt());
            let var = ens.members().iter().map(|x| (x[a] - mu).powi(2)).sum::<f64>() / m as f64;
            assert!((var / var_target - 1.0).abs() < 0.03, "{}: {var} vs {var_target}", entry.index);
        }
    }
    let idx = basis().entries()[0].index;
    assert!((cfg.prior_variance(idx, 0.0) - 2.0 * 2f64.powf(-5.0)).abs() < 1e-15);
}

#[test]
fn single_member_is_never_updated() {
    let cfg = quiet(EnkfConfig { ensemble_size: 1, max_iterations: 3, ..EnkfConfig::default() });
    let ens = sample_initial_ensemble(&random_vector(4), &cfg, basis()).unwrap();
    let member = ens.member(0);
    let u = born_mode_map(&random_vector(5), basis()).unwrap();
    let out = enkf_iterate(ens, linear, &u, &cfg).unwrap();
    assert_eq!(out.solution, member);
    assert_eq!(out.history.len(), 3);
    assert_eq!(out.history.stop, Some(StopReason::MaxIter));
}

#[test]
fn runs_are_bit_reproducible() {
    let cfg = quiet(EnkfConfig { ensemble_size: 40, max_iterations: 4, seed: 9, ..EnkfConfig::default() });
    let u = born_mode_map(&random_vector(6), basis()).unwrap();
    let run = || {
        let ens = sample_initial_ensemble(&CoefficientVector::zeros(layout()), &cfg, basis()).unwrap();
        enkf_iterate(ens, linear, &u, &cfg).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.solution, b.solution);
    assert_eq!(a.history, b.history);
}

/// The mean after one step equals the gain applied to the mean residual.
#[test]
fn mean_update_uses_the_mean_residual() {
    let cfg = quiet(EnkfConfig { ensemble_size: 30, max_iterations: 1, theta: 5.0, gamma: GammaStrategy::Conservative, ..EnkfConfig::default() });
    let u = born_mode_map(&random_vector(7), basis()).unwrap();
    let ens = sample_initial_ensemble(&CoefficientVector::zeros(layout()), &cfg, basis()).unwrap();
    let d = ens.dim();
    let members = ens.members().to_vec();
    let w: Vec<Vec<f64>> = members.iter().map(|q| linear(q).unwrap()).collect();
    let mean = |v: &[Vec<f64>]| -> Vec<f64> {
        (0..d).map(|a| v.iter().map(|x| x[a]).sum::<f64>() / v.len() as f64).collect()
    };
    let (qm, wm) = (mean(&members), mean(&w));
    let out = enkf_iterate(ens, linear, &u, &cfg).unwrap();
    let gamma = out.history.records[0].gamma;
    let cov = |x: &[Vec<f64>], xm: &[f64]| -> Vec<Complex> {
        let mut c = vec![Complex::new(0.0, 0.0); d * d];
        for (xi, wi) in x.iter().zip(&w) {
            for a in 0..d {
                for b in 0..d {
                    c[a * d + b] += (xi[a] - xm[a]) * (wi[b] - wm[b]) / members.len() as f64;
                }
            }
        }
        c
    };
    let t_qw = cov(&members, &qm);
    let mut t_ww = cov(&w, &wm);
    for a in 0..d {
        t_ww[a * d + a] += gamma;
    }
    let lu = LuFactorization::new(&ComplexDenseMatrix::from_entries(d, d, t_ww).unwrap()).unwrap();
    let mut z: Vec<Complex> = u.values().iter().zip(&wm).map(|(a, b)| Complex::new(a - b, 0.0)).collect();
    lu.solve_in_place(&mut z);
    let expected: Vec<f64> =
        (0..d).map(|a| qm[a] + (0..d).map(|b| t_qw[a * d + b].re * z[b].re).sum::<f64>()).collect();
    let got = out.solution.values();
    let scale = expected.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff = expected.iter().zip(got).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(diff < 1e-12 * scale.max(1.0), "{diff}");
}

#[test]
fn non_finite_forward_names_the_member() {
    let cfg = EnkfConfig { ensemble_size: 5, ..EnkfConfig::default() };
    let ens = sample_initial_ensemble(&CoefficientVector::zeros(layout()), &cfg, basis()).unwrap();
    let poisoned = ens.members()[3].clone();
    let forward = |q: &[f64]| -> prolate_enkf::Result<Vec<f64>> {
        let mut w = linear(q)?;
        if q == poisoned.as_slice() {
            w[0] = f64::NAN;
        }
        Ok(w)
    };
    let u = born_mode_map(&random_vector(8), basis()).unwrap();
    match enkf_iterate(ens, forward, &u, &cfg) {
        Err(Error::NonFiniteForward { member }) => assert_eq!(member, 3),
        other => panic!("expected a non-finite error, got {other:?}"),
    }
}

#[test]
fn ensemble_rejects_ragged_members() {
    assert!(Ensemble::new(layout(), vec![vec![0.0; 3]]).is_err());
    assert!(Ensemble::new(layout(), vec![]).is_err());
}

/// `C L^T (L C L^T + I/N_e)^-1 r` by a dense solve of the stacked real system.
fn dense_tikhonov(u: &CoefficientVector, cfg: &EnkfConfig) -> Vec<f64> {
    let entries = basis().entries();
    let d = 2 * entries.len();
    let mut l = vec![0.0; d * d];
    let mut c = vec![0.0; d];
    for (k, e) in entries.iter().enumerate() {
        let (a, b) = (e.alpha.re, e.alpha.im);
        let i = 2 * k;
        l[i * d + i] = a;
        l[i * d + i + 1] = -b;
        l[(i + 1) * d + i] = b;
        l[(i + 1) * d + i + 1] = a;
        c[i] = cfg.prior_variance(e.index, e.chi);
        c[i + 1] = c[i];
    }
    let a = ComplexDenseMatrix::from_fn(d, d, |i, j| {
        let s: f64 = (0..d).map(|k| l[i * d + k] * c[k] * l[j * d + k]).sum();
        Complex::new(s + if i == j { 1.0 / cfg.max_iterations as f64 } else { 0.0 }, 0.0)
    });
    let mut z: Vec<Complex> = u.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
    LuFactorization::new(&a).unwrap().solve_in_place(&mut z);
    (0..d).map(|i| c[i] * (0..d).map(|k| l[k * d + i] * z[k].re).sum::<f64>()).collect()
}

#[test]
fn tikhonov_matches_dense_solve() {
    for (theta, ne) in [(1.0, 5), (1e4, 1), (30.0, 20)] {
        let cfg = EnkfConfig { theta, max_iterations: ne, ..EnkfConfig::default() };
        let u = random_vector(10);
        let fast = tikhonov_phillips_linear(&u, basis(), &cfg).unwrap();
        let dense = dense_tikhonov(&u, &cfg);
        let norm = dense.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = dense.iter().zip(fast.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(diff < 1e-10 * norm, "theta {theta}: {diff}");
    }
    let zero = tikhonov_phillips_linear(&CoefficientVector::zeros(layout()), basis(), &EnkfConfig::default()).unwrap();
    assert!(zero.values().iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn inverse_born_is_lipschitz(s1 in 0u64..10_000, s2 in 0u64..10_000) {
        let b = basis();
        let (u1, u2) = (random_vector(s1), random_vector(s2));
        let q1 = inverse_born(&u1, b).unwrap();
        let q2 = inverse_born(&u2, b).unwrap();
        let dq: f64 = q1.values().iter().zip(q2.values()).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        let du: f64 = u1.values().iter().zip(u2.values()).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dq <= du / b.eta() + 1e-8);
    }

    #[test]
    fn regularized_matrix_is_bounded_below(seed in 0u64..1000, m in 2usize..12) {
        // T_ww + gamma I has smallest eigenvalue at least gamma.
        let cfg = EnkfConfig { ensemble_size: m, seed, ..EnkfConfig::default() };
        let ens = sample_initial_ensemble(&CoefficientVector::zeros(layout()), &cfg, basis()).unwrap();
        let w: Vec<Vec<f64>> = ens.members().iter().map(|q| linear(q).unwrap()).collect();
        let d = ens.dim();
        let wm: Vec<f64> = (0..d).map(|a| w.iter().map(|x| x[a]).sum::<f64>() / m as f64).collect();
        let mut t = vec![0.0; d * d];
        for x in &w {
            for a in 0..d {
                for c in 0..d {
                    t[a * d + c] += (x[a] - wm[a]) * (x[c] - wm[c]) / m as f64;
                }
            }
        }
        let gamma = prolate_enkf::reconstruction::regularization_gamma(GammaStrategy::NoiseAware, &t, d, 0.03).unwrap();
        for a in 0..d {
            t[a * d + a] += gamma;
        }
        let ev = prolate_enkf::numerics::symmetric_eigenvalues(&t, d).unwrap();
        prop_assert!(ev[0] >= gamma * (1.0 - 1e-9));
    }
}
