use thiserror::Error;

use crate::orderings::HypothesisClass;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empirical covariance is singular (pivot {pivot:.3e} at index {index}); need n >= d and non-collinear data")]
    SingularCovariance { index: usize, pivot: f64 },

    #[error("matrix block is numerically singular (pivot {pivot:.3e} at index {index})")]
    SingularBlock { index: usize, pivot: f64 },

    #[error("dimension {d} exceeds the supported maximum {max} for {what}")]
    DimensionTooLarge { d: usize, max: usize, what: &'static str },

    #[error("sample count must be at least 1")]
    InvalidSampleCount,

    #[error("no graph satisfying the effect constraint after {attempts} attempts")]
    GenerationExhausted { attempts: usize },

    #[error("degenerate quadratic for class {class}: conditional precision {pivot:.3e} is not positive")]
    DegenerateQuadratic { class: HypothesisClass, pivot: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
