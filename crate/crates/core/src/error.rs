use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Each variant belongs to a diagnostic category that the CLI maps onto a
/// process exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("format error in {}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("autodiff state error: {0}")]
    State(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("negative sampling failed: {0}")]
    Sampling(String),

    #[error("training diverged at epoch {epoch} (lr={lr:e}): {msg}")]
    Divergence { epoch: usize, lr: f64, msg: String },

    #[error("sweep failed: {0}")]
    Sweep(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short category name printed by the CLI next to the message.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Param(_) => "parameter",
            Error::Structure(_) => "structure",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
            Error::Shape(_) => "shape",
            Error::State(_) => "state",
            Error::Metric(_) => "metric",
            Error::Sampling(_) => "sampling",
            Error::Divergence { .. } => "divergence",
            Error::Sweep(_) => "sweep",
        }
    }

    /// Process exit code: 2 usage, 3 format, 4 numeric divergence, 5 I/O,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::Structure(_) => 2,
            Error::Format { .. } => 3,
            Error::Divergence { .. } | Error::Sweep(_) => 4,
            Error::Io { .. } => 5,
            _ => 1,
        }
    }
}
