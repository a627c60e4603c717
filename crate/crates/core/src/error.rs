//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: operands must share the same grid spec")]
    GridMismatch,

    #[error("no admissible ratio points: denominator never reached the floor {floor:e}")]
    EmptyWindow { floor: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("tail is not integrable over the grid (fitted decay exponent {alpha_hat:.3} <= 1)")]
    NonIntegrableTail { alpha_hat: f64 },

    #[error("distribution has bounded support; classifier requires unbounded support")]
    BoundedSupport,

    #[error("Monte Carlo budget exhausted: {hits} hits of {needed} needed after {proposals} proposals")]
    McBudgetExhausted {
        hits: u64,
        needed: u64,
        proposals: u64,
    },

    #[error(
        "series truncation failed: remainder bound {remainder:e} above tol {tol:e} at index cap {cap}"
    )]
    TruncationFailure {
        remainder: f64,
        tol: f64,
        cap: usize,
        /// Partial sum accumulated up to the cap, usable as a lower estimate.
        partial: Vec<f64>,
    },

    #[error("net profit condition violated: drift a = {a} >= 0, ruin is certain")]
    NonNegativeDrift { a: f64 },

    #[error("simulation needs at least {min} paths, got {got}")]
    TooFewPaths { min: u64, got: u64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("descriptor error: {0}")]
    Descriptor(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
