use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line count mismatch between source and target: {src} vs {tgt}")]
    Alignment { src: usize, tgt: usize },

    #[error("corpus is empty: {0}")]
    EmptyCorpus(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("selection error: {0}")]
    Selection(String),

    #[error("unsupported {kind} file version {found} (expected {expected})")]
    Version { kind: &'static str, found: u16, expected: u16 },

    #[error("malformed {kind} file: {msg}")]
    Format { kind: &'static str, msg: String },

    #[error("training diverged at update {update}: non-finite loss")]
    Diverged { update: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("strategy {strategy} failed: {source}")]
    Suite {
        strategy: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure category, used by the command line to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Diverged,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => ErrorKind::Usage,
            Error::Diverged { .. } => ErrorKind::Diverged,
            Error::Suite { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
