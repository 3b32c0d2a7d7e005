use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cost function: {0}")]
    InvalidCost(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("undefined: {0}")]
    Undefined(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error("schedule line {line}: {message}")]
    Schedule { line: usize, message: String },
    #[error("event {event}: {source}")]
    Event {
        event: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unknown report format `{0}`")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
