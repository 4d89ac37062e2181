//! Crate-wide error type and exit-code mapping.

/// Errors surfaced by the library. The CLI maps variants to process exit
/// codes: config errors exit 2, checkpoint errors exit 3, simulation
/// divergence exits 4, everything else 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("simulation diverged: {0}")]
    Diverged(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn checkpoint(msg: impl Into<String>) -> Self {
        Error::Checkpoint(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Checkpoint(_) => 3,
            Error::Diverged(_) => 4,
            _ => 1,
        }
    }
}
