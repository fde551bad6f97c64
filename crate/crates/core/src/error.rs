use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: usize, right: usize },

    #[error("series has zero constant term and cannot be inverted")]
    SingularSeries,

    #[error("non-finite coefficient at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid process specification: {0}")]
    Spec(String),

    #[error("probability mass leaked out of the box: {mass_in_box} remains")]
    Leakage { mass_in_box: f64 },

    #[error("quadrature did not converge: {0}")]
    Accuracy(String),

    #[error("inconclusive simulation: {0}")]
    Inconclusive(String),

    #[error("no samples to compare")]
    EmptySamples,

    #[error("cannot parse law `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
