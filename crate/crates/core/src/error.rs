use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("start and waypoint coincide; approach axis is undefined")]
    UndefinedAxis,

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("checkpoint config hash {found} does not match current config hash {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("episode {episode}, step {step}: maneuver to ({x:.3}, {y:.3}) timed out after {timeout_s} s")]
    ManeuverTimeout {
        episode: u32,
        step: u32,
        x: f64,
        y: f64,
        timeout_s: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True for failures of the simulation itself rather than of inputs.
    pub fn is_runtime(&self) -> bool {
        matches!(self, Error::ManeuverTimeout { .. } | Error::NonFinite(_))
    }
}
