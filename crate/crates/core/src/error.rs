use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Not enough p-adic digits left to return a meaningful answer.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    /// An eigenspace that should be a line came out with another rank.
    #[error("eigenspace rank {rank} (expected 1) at {digits} digits: {detail}")]
    Rank {
        rank: usize,
        digits: u32,
        detail: String,
    },
    /// A construction the library deliberately does not cover.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Structurally inconsistent input (e.g. a symbol violating its relations).
    #[error("inconsistent input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
