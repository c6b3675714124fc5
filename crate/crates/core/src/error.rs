//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Numerology parameters that cannot form a consistent grid.
    #[error("invalid plan: {0}")]
    Plan(String),

    /// Inputs whose shape does not match the plan they are used with.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Values outside an operation's domain (zero signals, non-positive
    /// levels, empty batches, ...).
    #[error("{0}")]
    Domain(String),

    /// Filter design requests that cannot be satisfied.
    #[error("filter design: {0}")]
    Filter(String),

    /// Window design requests that cannot be satisfied.
    #[error("window design: {0}")]
    Window(String),

    /// Config text that fails to parse, with its 1-based line number.
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// Config contents that parse but describe an unrunnable experiment.
    #[error("config: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config { line, msg: msg.into() }
    }
}
