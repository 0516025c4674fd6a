use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{what} index {index} out of range (must be < {bound})")]
    Index {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("invalid numeric input: {0}")]
    Numeric(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-finite gradient: {0}")]
    NonFinite(String),

    #[error("synchronization fault: {0}")]
    Sync(String),

    #[error("worker {worker} failed: {reason}")]
    Worker { worker: usize, reason: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable error class, used in failure rows of sweep CSVs.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Index { .. } => "index",
            Error::Numeric(_) => "numeric",
            Error::Input(_) => "input",
            Error::Parse { .. } => "parse",
            Error::NonFinite(_) => "non_finite",
            Error::Sync(_) => "sync",
            Error::Worker { .. } => "worker",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
        }
    }
}
