use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("operator is not a rank-1 projector: {0}")]
    NotRankOneProjector(String),

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("operation requires a {expected} channel, got {found}")]
    WrongVariant {
        expected: &'static str,
        found: &'static str,
    },

    #[error("ensemble too small: need at least {needed} samples, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(
    context: &'static str,
    expected: impl ToString,
    found: impl ToString,
) -> Error {
    Error::DimensionMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
