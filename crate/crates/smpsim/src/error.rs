//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition (dimension mismatch,
    /// invalid invariant, malformed input).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A requested object would exceed a configured resource cap.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A measurement branch with probability below the degeneracy threshold
    /// was asked to produce a post-state.
    #[error("degenerate branch: probability {prob:.3e} below threshold in {context}")]
    DegenerateBranch { prob: f64, context: String },

    /// A conditional-probability chain hit a vanishing denominator.
    #[error("degenerate chain: denominator {denom:.3e} at step {step}")]
    DegenerateChain { denom: f64, step: usize },

    /// A spectral-window projection annihilated the running state during
    /// message replacement. Carries enough context to report the run as
    /// out-of-regime rather than silently continuing.
    #[error(
        "degenerate projection at index {index}: window [{lo:.6}, {hi:.6}] captured trace {trace:.3e}"
    )]
    DegenerateProjection {
        index: usize,
        lo: f64,
        hi: f64,
        trace: f64,
    },

    /// Replay of a deterministic message diverged from the sender's sequence.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Probabilistic-method sampling failed to verify within the retry budget.
    #[error("existence sampling failed after {retries} retries: {context}")]
    SamplingFailed { retries: usize, context: String },

    /// An instance does not satisfy the hypothesis of the bound under test.
    #[error("instance rejected: {0}")]
    InstanceRejected(String),

    /// Bad CLI arguments or experiment configuration.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
