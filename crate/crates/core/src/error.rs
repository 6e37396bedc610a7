//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("matrix not positive definite at row {row} (pivot {pivot:.6e})")]
    NotSpd { row: usize, pivot: f64 },

    #[error("pcg stalled after {iters} iterations (relative residual {residual:.3e}, tol {tol:.1e})")]
    PcgStall { iters: usize, residual: f64, tol: f64 },

    #[error(
        "reference solve stopped after {iterations} iterations with gradient norm {grad_norm:.6e} (tol {tol:.1e})"
    )]
    ReferenceNotConverged { iterations: u64, grad_norm: f64, tol: f64 },

    #[error("sample counts must cover levels 0..={level} (expected {expected} entries, got {got})")]
    SampleCountShape { level: usize, expected: usize, got: usize },

    #[error("sample counts must all be at least 1")]
    SampleCountZero,

    #[error("level probabilities invalid: {reason}")]
    InvalidPmf { reason: String },

    #[error("screening needs at least 2 samples (got {got})")]
    TooFewSamples { got: usize },

    #[error("rate fit needs at least one positive difference moment")]
    EmptyRateFit,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("field at level {from} cannot be brought to level {to}")]
    LevelTransfer { from: usize, to: usize },

    #[error("reference cache {path}: {reason}")]
    Cache { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
