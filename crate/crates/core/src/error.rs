use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::generator::ObjectId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates its invariants.
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("database format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unsupported database format version {found:?}, expected {expected:?}")]
    Version { found: String, expected: &'static str },

    #[error("unknown object {0}")]
    UnknownObject(ObjectId),

    #[error("placement overflow: {0}")]
    Placement(String),

    #[error("run error: {0}")]
    Run(String),

    #[error("reports are not comparable: {0}")]
    Comparison(String),

    #[error("report error: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Param(_) | Error::Config(_))
    }
}
