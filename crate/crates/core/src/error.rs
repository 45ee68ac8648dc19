use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions, deformation matrices or malformed input data.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument is outside the supported range (axis index, power, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// An operation was called on data that does not satisfy its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Numerical inversion in the coefficient algebra did not reach tolerance.
    #[error("inversion failed: {reason} (achieved residual {residual:.3e})")]
    Inversion { reason: String, residual: f64 },

    #[error("tolerance exceeded: {0}")]
    Tolerance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Inversion { .. } | Error::Tolerance(_))
    }
}
