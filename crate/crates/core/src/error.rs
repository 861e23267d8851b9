//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building algebras, evaluating
/// expectations, or running a scenario.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Two objects that must live over the same algebra do not.
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    /// A constructor was fed structurally invalid data (bad dimensions,
    /// non-normalized weights, a partition that is not a partition, ...).
    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    /// A map that had to be a conditional expectation failed verification.
    #[error("expectation verification failed: {0}")]
    ExpectationInvalid(String),

    /// Numerical degeneracy (frame operator below the eigenvalue floor,
    /// singular Gram form, ...).
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// A distribution query the engine cannot answer (unknown generator,
    /// missing covariance entry, unsupported degree).
    #[error("distribution error: {0}")]
    Distribution(String),

    /// A candidate failed conjugate-system verification, so the requested
    /// quantity (e.g. a Fisher information value) is refused.
    #[error("verification failed: {0}")]
    VerificationFailed(String),

    /// Hypotheses of a theorem-level check are violated by the inputs.
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    /// Monte-Carlo: the (algebra, expectation) pair has no supported
    /// random-matrix realization.
    #[error("unsupported realization: {0}")]
    UnsupportedRealization(String),

    /// Scenario config parsing/validation problems; the string carries a
    /// field path for the offending entry.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
