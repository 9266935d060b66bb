use alloc::string::String;

use crate::lattice::LatticePoint;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension {0} is not supported (expected 2..=6)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("the set is empty")]
    EmptySet,
    #[error("duplicate point {0}")]
    DuplicatePoint(LatticePoint),
    #[error("invalid direction: {0}")]
    InvalidDirection(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("negative value {value} at {point}")]
    NegativeValue { point: LatticePoint, value: f64 },
    #[error("non-finite value at {0}")]
    NonFinite(LatticePoint),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("budget exceeded: {required} evaluations requested, cap is {cap}")]
    BudgetExceeded { required: u128, cap: u128 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
