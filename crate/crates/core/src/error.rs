use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no jumps above threshold {eps}")]
    NoJumpsAboveThreshold { eps: f64 },

    #[error("infinite tail mass above threshold {eps}")]
    InfiniteTailMass { eps: f64 },

    #[error("eigen system is empty: threshold {threshold} is below the first eigenvalue {first}")]
    EmptyEigenSystem { threshold: f64, first: f64 },

    #[error("box mismatch between noise realization and eigen system")]
    BoxMismatch,

    #[error("quadrature stalled: estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureStalled { error: f64, tolerance: f64 },

    #[error("function descriptor cannot be evaluated: {0}")]
    Unevaluable(String),

    #[error("refusing to pair with an uncertified function: {0}")]
    Uncertified(String),

    #[error(
        "no mild solution exists for d = {d}, gamma = {gamma} (requires gamma > d/4); set override to proceed"
    )]
    NonExistent { d: usize, gamma: f64 },

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }
}
