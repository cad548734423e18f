use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error)]
pub enum ObmError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model has no information about the threshold (alpha == beta).
    #[error("degenerate model: {0}")]
    Degenerate(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The limit-law tail bound could not be certified within the horizon cap.
    #[error("horizon error: {0}")]
    Horizon(String),

    /// Invariant broken inside the library (e.g. the rejection cap was hit).
    #[error("internal fault: {0}")]
    InternalFault(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ObmError> = std::result::Result<T, E>;
