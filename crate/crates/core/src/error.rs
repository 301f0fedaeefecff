use thiserror::Error;

/// Errors raised across the decomposition library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index {index} out of range (limit {limit})")]
    Range { index: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("score undefined: {0}")]
    UndefinedScore(String),

    #[error("non-finite loss evaluation at coordinate {coordinate} ({direction})")]
    NonFinite {
        coordinate: usize,
        direction: &'static str,
    },

    #[error("fit diverged at iteration {iteration}: loss {previous} -> {current}")]
    Divergence {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
