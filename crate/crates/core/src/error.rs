use thiserror::Error;

/// Position-annotated parse failure for coefficient expressions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" | "))]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Syntax(#[from] SyntaxError),

    #[error("path failed at step {step}: {reason}")]
    PathFailure { step: usize, reason: String },

    #[error("{failed} of {total} paths failed (more than 1%); first failure: {first}")]
    TooManyPathFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("mass ledger breach: {0}")]
    Integrity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
