//! Integer-order Bessel and Hankel functions of real argument.
//!
//! `J_n` comes from Miller's backward recurrence normalized by
//! `J_0 + 2 sum J_2k = 1`, which is stable for every order and argument.
//! `Y_0` and `Y_1` use the Neumann series over the same `J` sequence for
//! moderate arguments and the Hankel asymptotic expansion beyond
//! [`ASYMPTOTIC_THRESHOLD`]; higher `Y_n` follow by upward recurrence.

use super::Scalar;
use crate::{Error, Result};
use num_complex::Complex;

const ASYMPTOTIC_THRESHOLD: f64 = 25.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J,
    Y,
}

fn miller_start(n_max: usize, x: f64) -> usize {
    let base = n_max.max(x.ceil() as usize);
    let start = base + 20 + (10.0 * x.cbrt()).ceil() as usize;
    start + start % 2
}

/// `J_0(x), ..., J_{n_max}(x)` for `x >= 0`.
pub fn bessel_j_sequence<T: Scalar>(n_max: usize, x: T) -> Vec<T> {
    let mut out = vec![T::zero(); n_max + 1];
    if x == T::zero() {
        out[0] = T::one();
        return out;
    }
    let xf = x.to_f64().unwrap_or(0.0);
    let start = miller_start(n_max, xf);
    let big = T::max_value().sqrt().sqrt();
    let two_over_x = T::lit(2.0) / x;

    let mut next = T::zero();
    let mut cur = T::epsilon();
    let mut norm = T::zero();
    for k in (1..=start).rev() {
        if k <= n_max {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += T::lit(2.0) * cur;
        }
        let prev = two_over_x * T::from_usize_lossy(k) * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > big {
            cur /= big;
            next /= big;
            norm /= big;
            for v in out.iter_mut().skip(k) {
                *v /= big;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Hankel asymptotic `(J_nu, Y_nu)` for `nu in {0, 1}` and large `x`.
fn asymptotic_jy<T: Scalar>(nu: usize, x: T) -> (T, T) {
    let mu = T::lit(4.0 * (nu * nu) as f64);
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut last = T::infinity();
    for k in 1..200usize {
        let kf = T::from_usize_lossy(k);
        let odd = T::from_usize_lossy(2 * k - 1);
        term = term * (mu - odd * odd) / (T::lit(8.0) * kf * x);
        let mag = term.abs();
        if mag >= last {
            break;
        }
        last = mag;
        // P collects even k with sign (-1)^{k/2}, Q odd k with (-1)^{(k-1)/2}.
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    let chi = x - (T::from_usize_lossy(nu) * T::lit(0.5) + T::lit(0.25)) * T::PI();
    let amp = (T::lit(2.0) / (T::PI() * x)).sqrt();
    let (s, c) = chi.sin_cos();
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

/// Neumann series for `Y_0` and `Y_1` given `J_0..J_N`.
fn neumann_y01<T: Scalar>(x: T, j: &[T]) -> (T, T) {
    let gamma_log = (x * T::lit(0.5)).ln() + T::lit(EULER_GAMMA);
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let mut k = 1usize;
    while 2 * k + 1 < j.len() {
        let kf = T::from_usize_lossy(k);
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        s0 += sign * j[2 * k] / kf;
        s1 += sign * T::from_usize_lossy(2 * k + 1) / (kf * (kf + T::one())) * j[2 * k + 1];
        k += 1;
    }
    let two_over_pi = T::lit(2.0) / T::PI();
    let y0 = two_over_pi * (gamma_log * j[0] - T::lit(2.0) * s0);
    let y1 = two_over_pi * ((gamma_log - T::one()) * j[1] - j[0] / x - s1);
    (y0, y1)
}

/// `J_n(x)` for any real `x` (`J_n(-x) = (-1)^n J_n(x)`).
pub fn bessel_j<T: Scalar>(n: usize, x: T) -> T {
    if x < T::zero() {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if n <= 1 && x > T::lit(ASYMPTOTIC_THRESHOLD) {
        return asymptotic_jy(n, x).0;
    }
    bessel_j_sequence(n, x)[n]
}

/// `Y_n(x)` for `x > 0`.
pub fn bessel_y<T: Scalar>(n: usize, x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::invalid(format!("Y_{n} needs a positive argument, got {x}")));
    }
    let (y0, y1) = if x > T::lit(ASYMPTOTIC_THRESHOLD) {
        (asymptotic_jy(0, x).1, asymptotic_jy(1, x).1)
    } else {
        let xf = x.to_f64().unwrap_or(0.0);
        let len = miller_start(1, xf) + 2;
        let j = bessel_j_sequence(len, x);
        neumann_y01(x, &j)
    };
    match n {
        0 => Ok(y0),
        1 => Ok(y1),
        _ => {
            let (mut prev, mut cur) = (y0, y1);
            for k in 1..n {
                let next = T::lit(2.0) * T::from_usize_lossy(k) / x * cur - prev;
                prev = cur;
                cur = next;
            }
            Ok(cur)
        }
    }
}

/// `J_n` or `Y_n` selected by `kind`.
pub fn bessel<T: Scalar>(kind: BesselKind, n: usize, x: T) -> Result<T> {
    match kind {
        BesselKind::J => Ok(bessel_j(n, x)),
        BesselKind::Y => bessel_y(n, x),
    }
}

/// `H_n^{(1)}(x) = J_n(x) + i Y_n(x)` for `x > 0`.
pub fn hankel1<T: Scalar>(n: usize, x: T) -> Result<Complex<T>> {
    let y = bessel_y(n, x)?;
    Ok(Complex::new(bessel_j(n, x), y))
}
