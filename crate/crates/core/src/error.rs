use thiserror::Error;

/// Errors raised by the calculus engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate `{0}` has an empty support")]
    EmptySupport(String),
    #[error("coordinate `{id}` pmf sums to {sum}, expected 1")]
    UnnormalizedPmf { id: String, sum: f64 },
    #[error("coordinate `{id}`: {reason}")]
    InvalidCoordinate { id: String, reason: String },
    #[error("exact mode unavailable: {0}")]
    ExactModeOverflow(String),
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("functional is not centered (mean {mean})")]
    NotCentered { mean: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("functional must be positive (min {0})")]
    NonPositiveFunctional(f64),
    #[error("coordinates are not identically distributed: {0}")]
    NotIid(String),
    #[error("arity error: {0}")]
    ArityError(String),
    #[error("enumeration limit exceeded: {0}")]
    EnumOverflow(String),
    #[error("variance must be positive (entry {0})")]
    DegenerateVariance(usize),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("bad kernel: {0}")]
    BadKernel(String),
    #[error("bad density: {0}")]
    BadDensity(String),
    #[error("truncation failure: {0}")]
    TruncationFailure(String),
    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("functional/space mismatch: {0}")]
    Mismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
