//! Numerical kernels shared by the basis construction and the forward solvers.
//!
//! Everything here is generic over [`Scalar`] so the kernels can be exercised
//! in `f32` as well as `f64`.

mod bessel;
mod dense;
pub(crate) mod jacobi;
mod quadrature;
mod symmetric;
pub(crate) mod tridiag;

pub use bessel::{bessel, bessel_j, bessel_j_sequence, bessel_y, hankel1, BesselKind};
pub use dense::{dense_complex_solve, ComplexDenseMatrix, LuFactorization};
pub use jacobi::{jacobi_polynomials, jacobi_recurrence_coefficients};
pub use quadrature::{gauss_legendre, QuadratureRule};
pub use symmetric::{symmetric_eigenvalues, Cholesky};
pub use tridiag::{tridiagonal_eigen, TridiagonalEigen, TridiagonalSymmetric};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};

/// Real floating point type the numerical kernels are written against.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
