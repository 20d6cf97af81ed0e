use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller broke an operation's preconditions (shapes, orders, signs).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A coordinate or limit outside the discretized domain.
    #[error("out of range: {0}")]
    Range(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Data does not satisfy the structural hypotheses on the vorticity.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// Generated initial data failed one of its post-construction checks.
    #[error("initial data rejected: {0}")]
    Generation(String),
    #[error("degenerate evaluation: {0}")]
    Degenerate(String),
    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },
    #[error("non-finite {family} at j = {j}")]
    NonFinite { family: &'static str, j: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
