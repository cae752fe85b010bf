use thiserror::Error;

pub type Result<T> = std::result::Result<T, PrimeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrimeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `M v` vanished during power iteration; `step` is 1-based.
    #[error("degenerate matrix: power iterate vanished at step {step}")]
    DegenerateMatrix { step: usize },

    #[error("Gram matrix AA^H is singular (pivot {pivot:e} below threshold {threshold:e})")]
    SingularGram { pivot: f64, threshold: f64 },

    #[error("degenerate initialization: all measurements are zero")]
    DegenerateInit,

    #[error("backtracking diverged after {passes} inner passes")]
    BacktrackingDiverged { passes: usize },

    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },
}

impl PrimeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PrimeError::InvalidArgument(msg.into())
    }
}
