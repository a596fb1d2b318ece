use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the toolkit.
///
/// Variants are grouped by what went wrong rather than by module, so the
/// command layer can map each one onto a process exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or feature shapes that do not fit together.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An argument outside its documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A caller broke an API contract (e.g. non-scalar output handed to a gradient check).
    #[error("contract error: {0}")]
    Contract(String),

    /// Invalid model or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed file contents (bad header, truncated payload, checksum mismatch).
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    /// Inputs that are well-formed but inconsistent with each other.
    #[error("data error: {0}")]
    Data(String),

    /// A statistical or signal estimate could not be produced.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Metric inputs violate the metric's preconditions.
    #[error("metric error: {0}")]
    Metric(String),

    /// Non-finite values surfaced during optimisation.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Contract(_) | Error::Config(_) | Error::Dimension(_) => 1,
            Error::Format { .. } | Error::Data(_) | Error::Metric(_) | Error::Io { .. } => 2,
            Error::Estimation(_) | Error::Numerical(_) => 3,
        }
    }
}
