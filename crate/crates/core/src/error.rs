use thiserror::Error;

/// Errors raised anywhere in the library. The CLI maps every variant to exit
/// code 2 (input error) except [`Error::Numerical`], which is reported as a
/// FAIL verdict (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    /// Division by a series or jet whose leading coefficient is not a unit.
    #[error("singular: {0}")]
    Singular(String),
    /// Evaluation at a pole of a theta quotient.
    #[error("pole: {0}")]
    Pole(String),
    /// An argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),
    /// A required modularity hypothesis fails.
    #[error("anomaly: {0}")]
    Anomaly(String),
    /// A numerical routine could not reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
