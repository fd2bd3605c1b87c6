use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is numerically singular: pivot {pivot:e} at column {column}")]
    SingularMatrix { pivot: f64, column: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("radial truncation too small for m={m}, n={n}: tail ratio {tail:e}")]
    TruncationTooSmall { m: usize, n: usize, tail: f64 },

    #[error("prolate eigenvalue ratio is degenerate for m={m}, n={n}")]
    DegenerateRatio { m: usize, n: usize },

    #[error("point ({x}, {y}) lies outside the closed unit disk")]
    OutsideDisk { x: f64, y: f64 },

    #[error("contrast is not admissible at cell {cell}: {reason}")]
    Inadmissible { cell: usize, reason: String },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("iterative solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("forward map returned non-finite output for ensemble member {member}")]
    NonFiniteForward { member: usize },

    #[error("inverse crime: {0}")]
    InverseCrime(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
