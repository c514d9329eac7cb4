use thiserror::Error;

/// Errors raised by density construction, linear algebra and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mixture has no components")]
    EmptyMixture,

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("component {index}: weight {weight} must be strictly positive and finite")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("component {index}: covariance is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { index: usize, min_eigenvalue: f64 },

    #[error("matrix is rank deficient (smallest singular value {min_singular:e} < 1e-10)")]
    RankDeficient { min_singular: f64 },

    #[error("negative smoothing time t = {0}")]
    NegativeTime(f64),

    #[error("dimension {dim} too large (at most {max} supported)")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("dimension {dim} too small (at least {min} required)")]
    DimensionTooSmall { dim: usize, min: usize },

    #[error("base law must be one-dimensional, got dimension {0}")]
    NotUnivariate(usize),

    #[error("base law is not symmetric (max violation {0:e})")]
    NotSymmetricBase(f64),

    #[error("law is not symmetric (max violation {0:e}); use the asymmetric counterexample path instead")]
    NotSymmetric(f64),

    #[error("vectors are linearly dependent at index {index} (residual norm {residual:e})")]
    LinearlyDependent { index: usize, residual: f64 },

    #[error("unsupported shape k={k}, n={n}: {reason}")]
    UnsupportedShape { k: usize, n: usize, reason: String },

    #[error("projection is not balanced (row deviation {row_dev:e}, column deviation {col_dev:e})")]
    NotBalanced { row_dev: f64, col_dev: f64 },

    #[error("vector is not a unit vector (norm {0})")]
    NotUnitVector(f64),

    #[error("log-density is not finite at a sampled point")]
    NonFiniteLogDensity,

    #[error("score is not finite at a sampled point")]
    NonFiniteScore,

    #[error("truncation radius {radius} leaves tail mass {tail_mass:e} > 1e-12")]
    TruncationInsufficient { radius: f64, tail_mass: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("unsupported dimension {0}: direction scans support n = 2 or n = 3")]
    UnsupportedDimension(usize),

    #[error("invalid argument `{field}`: {message}")]
    InvalidArgument { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
