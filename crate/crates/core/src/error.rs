use thiserror::Error;

/// Everything that can go wrong in the computational layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid dimension n = {0}; require n >= 1")]
    InvalidDimension(usize),

    #[error("matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularMatrix { cond: f64 },

    #[error("basis construction broke down: structure is numerically degenerate")]
    DegenerateStructure,

    #[error("component index {0} outside 1..=9")]
    BadIndex(usize),

    #[error("operation requires n >= 2, got n = {0}")]
    DimensionTooSmall(usize),

    #[error("omega is not horizontal: omega(xi) = {0:.3e}")]
    OmegaNotHorizontal(f64),

    #[error("tensor breaks slot antisymmetry (residual {0:.3e})")]
    NotAntisymmetric(f64),

    #[error("transformation is not in G1: |du| = {0:.3e}")]
    NotInG1(f64),

    #[error("transformed metric is numerically singular")]
    SingularTransformedMetric,

    #[error("finite-difference step too small: halving disagreement {0:.3e}")]
    StepTooSmall(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
