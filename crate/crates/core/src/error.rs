use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability vector is empty")]
    EmptyVector,

    #[error("probability at index {index} is negative or not finite: {value}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, expected 1 within 1e-9")]
    SumNotOne { sum: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("non-finite function value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("no closed form: {0}")]
    NoClosedForm(String),

    #[error("enumeration needs {outcomes} outcomes, above the cap of {cap}")]
    FeasibilityCapExceeded { outcomes: u128, cap: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
