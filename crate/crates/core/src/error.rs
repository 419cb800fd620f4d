use thiserror::Error;

/// Errors raised by the numeric and algebraic routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("element is not positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("element does not lie in the subalgebra (residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },

    #[error("element is not relatively full (min eigenvalue of E(a) is {min_eigenvalue:.3e})")]
    NotFull { min_eigenvalue: f64 },

    #[error("sampling budget of {budget} exhausted (best normalized margin {best:.3e})")]
    BudgetExhausted { budget: usize, best: f64 },

    #[error("hypothesis not satisfied: {0}")]
    HypothesisFailed(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
