use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the model computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is malformed or out of its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The inputs are well formed but the requested quantity is undefined
    /// for them (degenerate margin, non-positive implied variance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation requires a structural property the inputs lack.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerical routine failed to produce a usable answer.
    #[error("numerical failure: {0}")]
    Numerical(String),
}
