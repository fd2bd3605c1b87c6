//! Inverse medium scattering with a disk prolate spheroidal low-rank space.
//!
//! The crate reconstructs a complex contrast `q` supported in the unit disk
//! from multi-static far-field data at a single wave number `k`:
//!
//! 1. [`pswf`] builds the disk prolate spheroidal wave functions for the
//!    bandwidth `c = 2k` and selects the modes whose prolate eigenvalue
//!    exceeds a cutoff.
//! 2. [`scattering`] solves the Lippmann–Schwinger equation (and the Born
//!    model) to produce far-field matrices.
//! 3. [`data`] adds noise, folds the far field onto the disk via reciprocity
//!    and projects it onto the basis.
//! 4. [`reconstruction`] computes the inverse Born initial guess and refines
//!    it with an ensemble Kalman filter in the low-rank coefficient space.
//! 5. [`harness`] holds phantoms, experiment orchestration and output files.
//!
//! The numerical kernels in [`numerics`] are generic over the floating point
//! type; the pipeline above them runs in `f64` through the aliases below.

pub mod data;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod pswf;
pub mod reconstruction;
pub mod scattering;

pub use error::{Error, Result};

/// Real scalar used by the reconstruction pipeline.
pub type Real = f64;
/// Complex scalar used by the reconstruction pipeline.
pub type Complex = num_complex::Complex<f64>;

pub type QuadratureRule = numerics::QuadratureRule<f64>;
pub type TridiagonalSymmetric = numerics::TridiagonalSymmetric<f64>;
pub type ComplexDenseMatrix = numerics::ComplexDenseMatrix<f64>;

pub use data::{CoefficientVector, NoiseSpec, ProcessedData};
pub use pswf::{PswfBasis, PswfIndex, SpectralCutoff};
pub use reconstruction::{EnkfConfig, Ensemble, GammaStrategy, ResidualHistory, StopReason};
pub use scattering::{ContrastField, DirectionSet, FarFieldMatrix, GridSpec};
