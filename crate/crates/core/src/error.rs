use thiserror::Error;

/// Errors raised anywhere in the testing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column {column} has zero variance and cannot be standardized")]
    DegenerateColumn { column: usize },

    #[error("variance estimate for variable {index} is not strictly positive ({value:e})")]
    DegenerateVariance { index: usize, value: f64 },

    #[error("lasso for node {node} did not converge after {sweeps} sweeps (kkt violation {gap:e})")]
    Convergence { node: usize, sweeps: usize, gap: f64 },

    #[error("{path}: row {row}, column {column}: {message}")]
    Ingestion {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by degenerate data rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateColumn { .. } | Error::DegenerateVariance { .. } | Error::Convergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
