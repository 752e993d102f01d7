use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid window plan: {0}")]
    InvalidPlan(String),
    #[error("no interaction records")]
    EmptyInput,
    #[error("every record lies before the window origin {origin}")]
    NoRecordsInPlan { origin: f64 },
    #[error("invalid social position config: {0}")]
    InvalidSpConfig(String),
    #[error("frame {frame}: outgoing commitments of node {node} are not normalized")]
    Unnormalized { frame: usize, node: String },
    #[error("group is empty")]
    EmptyGroup,
    #[error("frame {frame}: node {node} is not part of the snapshot")]
    NodeNotInFrame { frame: usize, node: String },
    #[error("no importance value for node {node}")]
    MissingImportance { node: String },
    #[error("importance mass of group is not positive")]
    NonPositiveImportance,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("group sets do not line up with frames: {0}")]
    GroupsetMismatch(String),
    #[error("line {line}: frame index {frame} is outside 1..={frames}")]
    FrameOutOfRange {
        line: u64,
        frame: usize,
        frames: usize,
    },
    #[error("event references unknown group: {0}")]
    UnknownGroup(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed artifact {path}: {message}")]
    MalformedArtifact { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// A non-fatal problem found while reading an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u64,
    pub message: String,
}

impl Diagnostic {
    pub fn new(line: u64, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}
