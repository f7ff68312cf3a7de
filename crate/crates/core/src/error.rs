use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid node id {id:?}: {reason}")]
    InvalidNodeId { id: String, reason: &'static str },

    #[error("pair endpoints must differ (got {0} twice)")]
    SelfPair(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("unknown agent {0}")]
    UnknownAgent(String),

    #[error("input not time-sorted at index {index}: {prev_ms} ms followed by {next_ms} ms")]
    Unsorted {
        index: usize,
        prev_ms: u64,
        next_ms: u64,
    },

    #[error("window holds {got} samples, at least {need} required")]
    WindowTooSmall { got: usize, need: usize },

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("{}:{line}:{column}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: u64,
        column: usize,
        message: String,
    },

    #[error("stream rejected: {0}")]
    Validation(String),

    #[error("out-of-order append: {0}")]
    OutOfOrder(String),

    #[error("corrupt record log: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
