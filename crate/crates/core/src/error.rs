use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("range error: {0}")]
    Range(String),
    #[error("balance error: 1/p + 1/q + (lambda - alpha - beta)/(n+m) - 2 = {residual:e}")]
    Balance { residual: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("gamma pole at {0}")]
    Pole(f64),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("no convergence after {iterations} iterations (last relative change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn range<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Range(msg.into()))
}
