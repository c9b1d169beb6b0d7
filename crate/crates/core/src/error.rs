use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {0} is outside the supported range [1, 1e16]")]
    Range(f64),

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: [usize; 2],
        right: [usize; 2],
    },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss([usize; 2]),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    /// The sentence cannot be used under the requested evaluation mode.
    #[error("sentence skipped: {0}")]
    Skip(&'static str),

    #[error("line {line}: {msg}")]
    Data { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Unsupported(_) => 2,
            Error::Numerical(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
