use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("element id {id} out of range for ground set of size {size}")]
    InvalidElement { id: usize, size: usize },

    #[error("ground set mismatch: expected {expected} elements, got {actual}")]
    GroundMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{what}: {count} candidates exceeds the enumeration limit of {limit}")]
    GuardExceeded {
        what: &'static str,
        count: u128,
        limit: u128,
    },

    #[error("curvature undefined: every singleton has zero value")]
    UndefinedCurvature,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
