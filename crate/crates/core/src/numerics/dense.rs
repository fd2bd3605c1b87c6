use super::Scalar;
use crate::{Error, Result};
use num_complex::Complex;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDenseMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexDenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let src = other.row(k);
                let dst = &mut out.entries[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, entries }
    }
}

impl<T> std::ops::Index<(usize, usize)> for ComplexDenseMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.entries[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for ComplexDenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.entries[i * self.cols + j]
    }
}

/// Partial-pivoted LU factorization `P A = L U`, reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct LuFactorization<T> {
    lu: ComplexDenseMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> LuFactorization<T> {
    pub fn new(a: &ComplexDenseMatrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut pivots = Vec::with_capacity(n);
        let scale = a.entries.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        let threshold = scale * T::epsilon() * T::from_usize_lossy(n);
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmag > threshold) {
                return Err(Error::SingularMatrix {
                    pivot: pmag.to_f64().unwrap_or(0.0),
                    column: k,
                });
            }
            pivots.push(p);
            if p != k {
                for j in 0..n {
                    lu.entries.swap(k * n + j, p * n + j);
                }
            }
            let inv = Complex::new(T::one(), T::zero()) / lu[(k, k)];
            let (head, tail) = lu.entries.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n + k + 1..k * n + n];
            for row in tail.chunks_exact_mut(n) {
                let factor = row[k] * inv;
                row[k] = factor;
                if factor.re == T::zero() && factor.im == T::zero() {
                    continue;
                }
                for (dst, &src) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *dst -= factor * src;
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Solves in place for one right-hand side.
    pub fn solve_in_place(&self, b: &mut [Complex<T>]) {
        let n = self.dim();
        for (k, &p) in self.pivots.iter().enumerate() {
            b.swap(k, p);
        }
        for i in 0..n {
            let row = self.lu.row(i);
            let mut s = b[i];
            for (l, &x) in row[..i].iter().zip(b[..i].iter()) {
                s -= l * x;
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = b[i];
            for (u, &x) in row[i + 1..].iter().zip(b[i + 1..].iter()) {
                s -= u * x;
            }
            b[i] = s / row[i];
        }
    }

    pub fn solve(&self, b: &ComplexDenseMatrix<T>) -> Result<ComplexDenseMatrix<T>> {
        if b.rows != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {}",
                b.rows,
                self.dim()
            )));
        }
        let mut out = b.clone();
        let mut col = vec![Complex::new(T::zero(), T::zero()); b.rows];
        for j in 0..b.cols {
            for i in 0..b.rows {
                col[i] = b[(i, j)];
            }
            self.solve_in_place(&mut col);
            for i in 0..b.rows {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}

/// Solves `A X = B` with a partial-pivoted LU factorization of `A`.
pub fn dense_complex_solve<T: Scalar>(
    a: &ComplexDenseMatrix<T>,
    b: &ComplexDenseMatrix<T>,
) -> Result<ComplexDenseMatrix<T>> {
    LuFactorization::new(a)?.solve(b)
}
