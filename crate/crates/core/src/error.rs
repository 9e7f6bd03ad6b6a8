use thiserror::Error;

/// Errors produced by the recovery toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The log-sum prox was asked to run with `epsilon <= sqrt(lambda_prox)`,
    /// where it is discontinuous.
    #[error("log-sum prox outside its continuous regime: epsilon {epsilon} <= sqrt(lambda_prox {lambda_prox})")]
    RegimeViolation { lambda_prox: f64, epsilon: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("quadrature did not reach tolerance: estimate {estimate}, error bound {error_bound}")]
    QuadratureFailure { estimate: f64, error_bound: f64 },

    #[error("matrix factorization failed: {0}")]
    Factorization(String),

    /// Success/failure of the state evolution is not monotone in the
    /// measurement rate over the search bracket.
    #[error("non-monotone recovery pattern: alpha {alpha_success} succeeds but larger alpha {alpha_failure} fails")]
    NonMonotone { alpha_success: f64, alpha_failure: f64 },

    #[error("diverged at iteration {iter}: {reason}")]
    Diverged { iter: usize, reason: String },

    #[error("every regularization value diverged")]
    AllDiverged,

    #[error("malformed instance data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
