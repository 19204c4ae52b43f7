use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("vectors must have at least one entry")]
    EmptyVector,

    #[error("non-finite entry {value} at index {index}")]
    NonFiniteEntry { index: usize, value: f64 },

    #[error("convex hull needs at least one generator")]
    EmptyHull,

    #[error("search direction must have unit norm, got {norm}")]
    NonUnitDirection { norm: f64 },

    #[error("objective returned a non-finite value at t = {t}")]
    NonFiniteValue { t: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("objective is not finite at the starting point")]
    InvalidStart,

    #[error("oracle `{0}` can return non-singleton subdifferentials")]
    NotSmooth(String),

    #[error("subdifferential is not a singleton at the requested point")]
    NotSmoothAt,

    #[error("oracle `{0}` is not a quadratic")]
    NotQuadratic(String),

    #[error("trace needs at least two records, found {0}")]
    InsufficientTrace(usize),

    #[error("linear system is singular or conjugate gradients failed to converge")]
    SingularMatrix,

    #[error("max-affine objective needs at least one piece")]
    EmptyPieces,
}

pub type Result<T> = std::result::Result<T, Error>;
