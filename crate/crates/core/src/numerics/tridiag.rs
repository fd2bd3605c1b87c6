use super::Scalar;
use crate::{Error, Result};

/// Symmetric tridiagonal matrix stored by its diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSymmetric<T> {
    pub diagonal: Vec<T>,
    pub offdiagonal: Vec<T>,
}

impl<T: Scalar> TridiagonalSymmetric<T> {
    pub fn new(diagonal: Vec<T>, offdiagonal: Vec<T>) -> Result<Self> {
        if diagonal.is_empty() || offdiagonal.len() + 1 != diagonal.len() {
            return Err(Error::DimensionMismatch(format!(
                "tridiagonal with {} diagonal and {} off-diagonal entries",
                diagonal.len(),
                offdiagonal.len()
            )));
        }
        Ok(Self { diagonal, offdiagonal })
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// `T v`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut out = vec![T::zero(); n];
        for i in 0..n {
            let mut s = self.diagonal[i] * v[i];
            if i > 0 {
                s += self.offdiagonal[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.offdiagonal[i] * v[i + 1];
            }
            out[i] = s;
        }
        out
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors;
/// `vectors[j]` belongs to `values[j]`.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

/// Full eigendecomposition by implicit QL iteration with Wilkinson shifts.
pub fn tridiagonal_eigen<T: Scalar>(t: &TridiagonalSymmetric<T>) -> TridiagonalEigen<T> {
    let n = t.dim();
    let mut d = t.diagonal.clone();
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(&t.offdiagonal);
    // z[k][i]: component k of eigenvector i, kept row-major for the rotations.
    let mut z = vec![vec![T::zero(); n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = T::one();
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                // Deflation has stalled; accept the current approximation.
                break;
            }
            let two = T::lit(2.0);
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let zf = row[i + 1];
                    row[i + 1] = s * row[i] + c * zf;
                    row[i] = c * row[i] - s * zf;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| z.iter().map(|row| row[i]).collect())
        .collect();
    TridiagonalEigen { values, vectors }
}

/// One step of inverse iteration on `(T - shift I) x = v`, renormalized.
///
/// Restores relative accuracy in rapidly decaying eigenvector components
/// that the QL rotations only resolve to `eps * ||T||`.
pub(crate) fn refine_eigenvector<T: Scalar>(
    t: &TridiagonalSymmetric<T>,
    shift: T,
    v: &[T],
) -> Vec<T> {
    let n = t.dim();
    if n == 1 {
        return vec![T::one().copysign(v[0])];
    }
    // Gaussian elimination with partial pivoting on the shifted tridiagonal
    // matrix; U has two super-diagonals after pivoting.
    let tiny = T::epsilon() * (t.diagonal.iter().fold(T::zero(), |a, &b| a.max(b.abs())) + T::one());
    let mut u0 = vec![T::zero(); n];
    let mut u1 = vec![T::zero(); n];
    let mut u2 = vec![T::zero(); n];
    let mut rhs = v.to_vec();
    let mut diag = t.diagonal[0] - shift;
    let mut sup = t.offdiagonal[0];
    let mut sup2 = T::zero();
    for i in 0..n - 1 {
        let sub = t.offdiagonal[i];
        let next_diag = t.diagonal[i + 1] - shift;
        let next_sup = if i + 1 < n - 1 { t.offdiagonal[i + 1] } else { T::zero() };
        if sub.abs() > diag.abs() {
            // Swap rows i and i+1.
            let factor = diag / sub;
            u0[i] = sub;
            u1[i] = next_diag;
            u2[i] = next_sup;
            rhs.swap(i, i + 1);
            rhs[i + 1] = rhs[i + 1] - factor * rhs[i];
            diag = sup - factor * next_diag;
            sup = sup2 - factor * next_sup;
            sup2 = T::zero();
        } else {
            let piv = if diag.abs() < tiny { tiny } else { diag };
            let factor = sub / piv;
            u0[i] = piv;
            u1[i] = sup;
            u2[i] = sup2;
            rhs[i + 1] = rhs[i + 1] - factor * rhs[i];
            diag = next_diag - factor * sup;
            sup = next_sup;
            sup2 = T::zero();
        }
    }
    u0[n - 1] = if diag.abs() < tiny { tiny } else { diag };
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / u0[i];
    }
    let norm = x.iter().fold(T::zero(), |a, &b| a + b * b).sqrt();
    let dot = x.iter().zip(v).fold(T::zero(), |a, (&p, &q)| a + p * q);
    let sign = if dot < T::zero() { -T::one() } else { T::one() };
    x.iter().map(|&xi| sign * xi / norm).collect()
}
