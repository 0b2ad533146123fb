use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("outside regime: {0}")]
    OutOfRegime(String),
    #[error("no uniform loop: {0}")]
    NoLoop(String),
    #[error("inconsistent certificate: {0}")]
    InconsistentCertificate(String),
    #[error("not synthesizable: {0}")]
    NotSynthesizable(String),
    #[error("plan verification failed: {0}")]
    Verification(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
