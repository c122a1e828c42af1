use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("cannot differentiate {0}")]
    NotDifferentiable(&'static str),

    /// Adaptive quadrature ran out of depth; `partial` is the best estimate reached.
    #[error("quadrature on [{a}, {b}] did not converge (partial estimate {partial})")]
    NonConvergence { a: f64, b: f64, partial: f64 },

    #[error("value {value} outside attained range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// The source term vanished, changed sign or was not evaluable at a validation sample.
    #[error("source term is not of constant nonzero sign: f({u}) = {value}")]
    SignChange { u: f64, value: f64 },

    #[error("no sign change on bracket [{a}, {b}] (F(a) = {fa}, F(b) = {fb})")]
    InvalidBracket { a: f64, b: f64, fa: f64, fb: f64 },

    #[error("closed form not covered for m = {m}, n = {n}")]
    NotCovered { m: i64, n: i64 },

    #[error("line {line}: {message}")]
    ProblemFile { line: usize, message: String },

    #[error("field has no valid interior nodes")]
    EmptyReport,

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
