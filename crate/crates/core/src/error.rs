use thiserror::Error;

/// Errors raised by constructions and checks in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("z = {z} lies outside the series domain ({domain})")]
    DomainViolation { z: String, domain: String },

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("negative squared weight {value} at index {index}")]
    NegativeWeight { index: i64, value: String },

    #[error("no bilateral solution for q = {0} (q >= 1)")]
    NoBilateralSolution(String),

    #[error("inadmissible alpha = {alpha}: {reason}")]
    InadmissibleAlpha { alpha: String, reason: String },

    #[error("no formally normal solution for q = {0} (q >= 1)")]
    NoNormalSolution(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interior exhausted: {0}")]
    InteriorExhausted(String),

    #[error("selfcommutator has negative interior eigenvalue {0}")]
    NegativeCommutator(f64),

    #[error("exact arithmetic unavailable: {0}")]
    ExactUnavailable(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("moment sequence is not a Stieltjes sequence: {0}")]
    NotStieltjes(String),

    #[error("insufficient angular points: need at least {needed}, got {got}")]
    InsufficientAngularPoints { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
