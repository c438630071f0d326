use thiserror::Error;

/// Errors produced anywhere in the simulation stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("topology error: {message} (nodes: {nodes:?})")]
    Topology { message: String, nodes: Vec<String> },

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("rate degeneracy: {0}; integrate the master equation numerically instead")]
    Degenerate(String),

    #[error("chain not reducible: {0}")]
    NotReducible(String),

    #[error("infinite mean switching time: {0}")]
    InfiniteTime(String),

    #[error("step-size error: {0}")]
    StepSize(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("semantic error at line {line}: {message}")]
    Semantic { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn topology(msg: impl Into<String>, nodes: Vec<String>) -> Self {
        Error::Topology {
            message: msg.into(),
            nodes,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Semantic { .. } => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
