use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("filter design failed: {0}")]
    DesignFailure(String),

    #[error("signal too short: need more than {required} samples, got {actual}")]
    TooShort { required: usize, actual: usize },

    #[error("events out of range (indices {offending:?}): {detail}")]
    OutOfRange { offending: Vec<usize>, detail: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("class {class} has {count} epochs, at least {required} required")]
    InsufficientData { class: u32, count: usize, required: usize },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("no convergence after {iterations} iterations (last delta {last_delta:e})")]
    Convergence { iterations: usize, last_delta: f64 },

    #[error("rank-deficient covariance: {0}")]
    RankDeficient(String),

    #[error("references misaligned: {0}")]
    Alignment(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("missing coverage: {0}")]
    Coverage(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),
}

impl Error {
    /// Shorthand for [`Error::InvalidParameter`].
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of the numerics themselves rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DesignFailure(_)
                | Error::Decomposition(_)
                | Error::Convergence { .. }
                | Error::RankDeficient(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
