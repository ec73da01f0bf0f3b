use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is ill-conditioned or singular (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// No AN and an ideal BS transmitter leave the eavesdropper interference-free.
    #[error("eavesdropper capacity is unbounded: {0}")]
    UnboundedEveCapacity(String),

    #[error("capacity bound is outside its validity region: {0}")]
    BoundInvalid(String),

    #[error("quadratic for the optimal power split has no real root (discriminant {0:.3e})")]
    NoRealRoot(f64),

    #[error("unknown experiment `{name}`; available experiments: {available}")]
    UnknownExperiment { name: String, available: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::Dimension(_)
            | Error::UnknownExperiment { .. }
            | Error::Config(_) => 2,
            Error::IllConditioned { .. }
            | Error::Degenerate(_)
            | Error::UnboundedEveCapacity(_)
            | Error::BoundInvalid(_)
            | Error::NoRealRoot(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}
