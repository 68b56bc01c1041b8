use thiserror::Error;

/// Errors raised by the estimators and their inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("partition of kind `{partition}` cannot classify a {point} point")]
    IncompatiblePartition {
        partition: &'static str,
        point: &'static str,
    },
    #[error("observable `{observable}` is not defined on {family}")]
    IncompatibleObservable {
        observable: &'static str,
        family: &'static str,
    },
    #[error("refinement unsupported: {0}")]
    UnsupportedKind(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("cover budget of {max_centers} centers exhausted with mass {covered_mass}")]
    BudgetExhausted {
        max_centers: usize,
        covered_mass: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
