use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug)]
pub enum Error {
    /// Incompatible matrix or batch shapes; the message names both shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A categorical distribution that is empty, negative, or not normalized.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A vector with zero norm where a direction is required.
    #[error("degenerate vector: {0}")]
    DegenerateVector(String),

    /// A violated operation contract (stale trace, bad range, too few rows, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A similarity kind that cannot be used as a training loss.
    #[error("unsupported loss: {0}")]
    UnsupportedLoss(String),

    /// Malformed input text; carries the 1-based line (or position) it was found at.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Category tag used by the CLI's machine-readable error prefix.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::Io(_) => "data",
            _ => "contract",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
