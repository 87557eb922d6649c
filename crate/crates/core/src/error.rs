use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("particle {particle} has a non-finite position ({x}, {y}, {z})")]
    NonFinitePosition { particle: usize, x: f64, y: f64, z: f64 },

    #[error("time step {dt:e} s exceeds the stability limit {limit:e} s")]
    TimeStepTooLarge { dt: f64, limit: f64 },

    #[error("non-finite ADM1 rate in process {process} for particle {particle}")]
    NonFiniteRate { particle: usize, process: &'static str },

    #[error("{what} solve failed to bracket a root (residual {residual:e})")]
    SolverFailure { what: String, residual: f64 },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parameter file error: {0}")]
    Params(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
