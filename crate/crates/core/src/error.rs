//! Crate-wide error type.

/// Errors produced by graph construction, path simulation, and the
/// time-stepping solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty time grid")]
    EmptyGrid,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("proximal solver failed at step {step}: {detail}")]
    ProxFailure { step: usize, detail: String },

    #[error("state overflow at step {step}: |x| = {norm:.3e} exceeds the guard")]
    Overflow { step: usize, norm: f64 },

    #[error(
        "fixed-point iteration is not contracting (last distance ratios {ratios:?}); \
         try a smaller budget alpha"
    )]
    NonContractive { ratios: Vec<f64> },

    #[error("segment limit exceeded: {0} segments without reaching the horizon")]
    SegmentLimit(usize),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),
}

pub type Result<T> = std::result::Result<T, Error>;
