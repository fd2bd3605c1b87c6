#![allow(dead_code)]

use prolate_enkf::numerics::gauss_legendre;
use prolate_enkf::pswf::PswfBasis;
use prolate_enkf::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Polar product rule on the unit disk: Gauss-Legendre in `r` (with the
/// `r dr` Jacobian folded in) times the trapezoid rule in `theta`.
pub fn disk_rule(radial: usize, angular: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let (r, wr) = gauss_legendre::<f64>(radial).unwrap().mapped(0.0, 1.0);
    let h = 2.0 * PI / angular as f64;
    let mut points = Vec::with_capacity(radial * angular);
    let mut weights = Vec::with_capacity(radial * angular);
    for (ri, wi) in r.iter().zip(&wr) {
        for a in 0..angular {
            let t = a as f64 * h;
            points.push([ri * t.cos(), ri * t.sin()]);
            weights.push(wi * ri * h);
        }
    }
    (points, weights)
}

pub fn random_complex(n: usize, seed: u64) -> Vec<Complex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Indices of the `count` entries with largest `|alpha|`.
pub fn largest_alpha(basis: &PswfBasis, count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..basis.len()).collect();
    idx.sort_by(|&a, &b| basis.entries()[b].alpha.norm().total_cmp(&basis.entries()[a].alpha.norm()));
    idx.truncate(count);
    idx
}
