use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inversion is undefined at the origin")]
    OriginInversion,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("lines are parallel, no corner")]
    ParallelLines,

    #[error("ambiguous line direction: point scatter is isotropic")]
    AmbiguousDirection,

    #[error("line covariance has not been computed")]
    MissingCovariance,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
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

    /// Process exit code used by the `csf` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } | Error::Validation(_) | Error::MissingCovariance => 3,
            Error::OriginInversion
            | Error::DegenerateGeometry(_)
            | Error::ParallelLines
            | Error::AmbiguousDirection => 4,
            Error::Io { .. } => 5,
        }
    }
}
