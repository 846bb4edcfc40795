use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value on path {path} at step {step}: {what}")]
    NonFinite {
        path: usize,
        step: usize,
        what: &'static str,
    },

    #[error("fixed point did not converge at time step {step} (path {path}) after {iterations} iterations, last gap {gap:e}")]
    FixedPoint {
        step: usize,
        path: usize,
        iterations: usize,
        gap: f64,
    },

    #[error("quadrature did not converge: residual estimate {residual:e} exceeds tolerance {tolerance:e}")]
    Quadrature { residual: f64, tolerance: f64 },

    #[error("enumeration budget exceeded: {count} control sequences requested, limit is {limit}")]
    Budget { count: usize, limit: usize },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
