//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("activations do not match this network (stale or foreign forward pass)")]
    StaleActivations,

    #[error("operation requires a scalar-output network, got output dim {0}")]
    NonScalarOutput(usize),

    #[error("labels for logistic loss must be 0 or 1, got {0}")]
    InvalidLabel(f64),

    #[error("matrix not factorizable even after jitter up to {max_jitter:e}")]
    NotFactorizable { max_jitter: f64 },

    #[error("insufficient data: need at least {need} rows, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),

    #[error("scores contain a single class only")]
    SingleClass,

    #[error("scheduling instance is infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large for brute force: T^m = {size:e} exceeds guard {guard:e}")]
    SizeGuard { size: f64, guard: f64 },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("unknown method name: {0}")]
    UnknownMethod(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
