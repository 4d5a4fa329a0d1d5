use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data cannot be standardized or modelled.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A caller broke a documented precondition (shape, ordering, length).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Gradient descent produced a non-finite loss, gradient or parameter.
    #[error("training diverged at step {step}")]
    Diverged { step: usize },

    /// The kernel matrix stayed indefinite after the full jitter ladder.
    #[error("cholesky factorization failed (size {size}, jitter up to {max_jitter:e})")]
    Cholesky { size: usize, max_jitter: f64 },

    /// Reading or writing a file failed.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
