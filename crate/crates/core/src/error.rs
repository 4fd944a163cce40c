use thiserror::Error;

use crate::fit::ExpSumApprox;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Seed sits on (or maps onto) a fixed point of the chaotic map.
    #[error("degenerate chaotic seed {0}")]
    DegenerateSeed(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("argument outside function domain: {0}")]
    Domain(String),
    #[error("series truncation failed: {0}")]
    Truncation(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Curve fit gave up; carries the best parameter set seen, if any was finite.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("exponential-sum fit did not converge: {reason}")]
pub struct FitError {
    pub reason: String,
    pub best: Option<Box<ExpSumApprox>>,
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
