//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// A two-form evaluated to a matrix that is not antisymmetric within tolerance.
    #[error("malformed two-form: |omega + omega^T| = {defect:.3e} exceeds {tol:.3e}")]
    MalformedForm { defect: f64, tol: f64 },

    /// State coordinates do not match the layout they claim to follow.
    #[error("layout mismatch: expected dimension {expected}, got {got}")]
    LayoutMismatch { expected: usize, got: usize },

    /// Constraint projection did not reach the requested tolerance.
    #[error("projection failed after {iterations} iterations, residual {residual:.3e}")]
    ProjectionFailure { iterations: usize, residual: f64 },

    /// A metric split was requested for a slice that is not spacelike.
    #[error("signature error: {0}")]
    Signature(String),

    /// Non-finite values appeared during time integration.
    #[error("blow-up at step {step}: non-finite state component")]
    BlowUp { step: usize },

    /// Catch-all for invalid arguments.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
