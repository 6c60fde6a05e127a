use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(&'static str),

    #[error("numerical failure in {what}: residual {residual:e}")]
    Numerical { what: &'static str, residual: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(&'static str),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("index {index} out of range (limit {limit})")]
    Index { index: usize, limit: usize },

    #[error("fixed-point iteration diverged at step {step} (q = {value:e})")]
    Divergence { step: usize, value: f64 },

    #[error("no bracket found on [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    #[error("degenerate Jacobian average {0:e} at the transition")]
    DegenerateAverage(f64),

    #[error("protocol error: {0}")]
    Protocol(&'static str),

    #[error("scaling fit too poor (r2 = {r2:.3})")]
    PoorScaling { r2: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
