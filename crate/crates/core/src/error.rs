use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state: amplitude vector has zero or non-finite norm")]
    DegenerateState,

    #[error("norm drift {drift:e} exceeds hard limit")]
    NormDrift { drift: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("unknown basis label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate basis label `{0}`")]
    DuplicateLabel(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("measurement basis does not partition the state labels: {0}")]
    IncompleteBasis(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch between wavefunctions or potential")]
    GridMismatch,

    #[error("enumeration too large: {terms} path terms over {steps} steps")]
    EnumerationTooLarge { terms: f64, steps: usize },

    #[error("spacetime points out of order: {0}")]
    Ordering(String),

    #[error("site {site} at step {step} is not null (|amplitude| = {magnitude:e})")]
    NotNull {
        site: usize,
        step: usize,
        magnitude: f64,
    },

    #[error("no events: {0}")]
    NoEvents(String),

    #[error("rate unbounded: per-cycle probability is 1")]
    RateUnbounded,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
