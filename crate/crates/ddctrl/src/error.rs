use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure in {what} after {iterations} iterations")]
    Numerical { what: &'static str, iterations: usize },

    #[error("iteration did not converge after {iterations} steps (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("invalid problem specification: {0}")]
    Spec(String),

    #[error("data format error: {0}")]
    Format(String),

    #[error("data inconsistent: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Consistency { residual: f64, tol: f64 },

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dimension(context: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Dimension {
            context,
            expected: expected.into(),
            got: got.into(),
        }
    }
}
