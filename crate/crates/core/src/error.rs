use thiserror::Error;

/// Errors raised by the simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("truncation insufficient: population {leakage:.3e} above Fock level {guard_n} exceeds {limit:.1e}")]
    TruncationInsufficient { leakage: f64, guard_n: usize, limit: f64 },

    #[error("operator is not hermitian: max |H - H^dagger| = {defect:.3e}")]
    NotHermitian { defect: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quadrature not converged: doubling the node density changed the result by {change:.3e}")]
    QuadratureNotConverged { change: f64 },

    #[error("normalization is undefined: computed inverse-square norm {value:.3e} is not positive")]
    NonPositiveNormSquared { value: f64 },

    #[error("singular matrix encountered in a linear solve")]
    SingularMatrix,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
