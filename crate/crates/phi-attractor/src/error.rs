use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integration blew up at t = {time}")]
    Blowup { time: f64 },
    #[error("property ({index}) violated with excess {excess:e}")]
    PropertyViolated { index: usize, excess: f64 },
    #[error("rejected instance: {reason} at t = {t}, v = {v}")]
    Rejected { reason: String, t: f64, v: f64 },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("experiment failed: {0}")]
    Experiment(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
