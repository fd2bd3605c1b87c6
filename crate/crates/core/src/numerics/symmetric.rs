//! Dense real symmetric matrices: eigenvalues and Cholesky solves.

use super::tridiag::{tridiagonal_eigen, TridiagonalSymmetric};
use super::Scalar;
use crate::{Error, Result};

/// Eigenvalues (ascending) of a row-major symmetric `n x n` matrix by
/// Householder reduction to tridiagonal form.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], n: usize) -> Result<Vec<T>> {
    if a.len() != n * n || n == 0 {
        return Err(Error::DimensionMismatch(format!("{} entries for a {n}x{n} matrix", a.len())));
    }
    let mut m = a.to_vec();
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        // Householder vector annihilating m[k+2.., k].
        let alpha_sq = (k + 1..n).fold(T::zero(), |s, i| s + m[i * n + k] * m[i * n + k]);
        let x0 = m[(k + 1) * n + k];
        let alpha = -alpha_sq.sqrt().copysign(x0);
        let mut v = vec![T::zero(); n];
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = m[i * n + k];
        }
        let vnorm_sq = (k + 1..n).fold(T::zero(), |s, i| s + v[i] * v[i]);
        if vnorm_sq == T::zero() {
            continue;
        }
        // A <- H A H with H = I - 2 v v^T / (v^T v).
        let two = T::lit(2.0);
        let p: Vec<T> = (0..n)
            .map(|i| (k + 1..n).fold(T::zero(), |s, j| s + m[i * n + j] * v[j]) * two / vnorm_sq)
            .collect();
        let kk = (k + 1..n).fold(T::zero(), |s, i| s + v[i] * p[i]) / vnorm_sq;
        let w: Vec<T> = (0..n).map(|i| p[i] - kk * v[i]).collect();
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] -= v[i] * w[j] + w[i] * v[j];
            }
        }
    }
    for i in 0..n {
        diag[i] = m[i * n + i];
        if i + 1 < n {
            off[i] = m[(i + 1) * n + i];
        }
    }
    let t = TridiagonalSymmetric::new(diag, off)?;
    Ok(tridiagonal_eigen(&t).values)
}

/// Cholesky factor `A = L L^T` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn new(a: &[T], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch(format!("{} entries for a {n}x{n} matrix", a.len())));
        }
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) {
                return Err(Error::SingularMatrix { pivot: d.to_f64().unwrap_or(0.0), column: j });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}
