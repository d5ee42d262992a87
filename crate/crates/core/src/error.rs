use std::path::PathBuf;

/// Errors produced by the geometry and quadrature routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} = {value} is not on the grid lattice; nearest representable values are {below} and {above}")]
    Misaligned {
        what: &'static str,
        value: f64,
        below: f64,
        above: f64,
    },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("insufficient padding: {0}")]
    Padding(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

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
}
