//! Error type shared by every stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field singular at V = {v}, C = {c}: {what}")]
    Singular { v: f64, c: f64, what: &'static str },

    #[error("critical point {0} is not real for these parameters")]
    NotReal(&'static str),

    #[error("degenerate chart at infinity (B = 0)")]
    DegenerateChart,

    #[error("parameters outside the construction regime: {0}")]
    OutOfRegime(String),

    #[error("eigen-decomposition failed at {0}")]
    EigenFailure(&'static str),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("tolerance check failed: {0}")]
    Tolerance(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
