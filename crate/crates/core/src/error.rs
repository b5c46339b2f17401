use thiserror::Error;

use crate::rhs_expr::{EvalError, ParseError};

pub type Result<T, E = RkhsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RkhsError {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A function was evaluated outside of where it is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The `k/x` term cannot be evaluated or removed at the requested point.
    #[error("singularity: {0}")]
    Singularity(String),
    /// Factorization failure, singular system or non-finite intermediate.
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("quadrature did not reach tolerance {tol:e} (error estimate {estimate:e})")]
    Tolerance { tol: f64, estimate: f64 },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl From<EvalError> for RkhsError {
    fn from(err: EvalError) -> Self {
        RkhsError::Domain(err.to_string())
    }
}
