use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument: wrong size, out-of-range probability, empty input.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A documented precondition on the input structure does not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// An iteration failed to converge or produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The input is well-formed but degenerate for the requested operation.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
