use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: {what} requires n = {n}, cap is {cap}")]
    Capacity { what: &'static str, n: usize, cap: usize },

    #[error("degenerate matching: x must be nonzero")]
    DegenerateMatching,

    /// Parity labels did not pin down x; more examples are needed.
    #[error("insufficient data: label system has rank {rank} < n = {n}")]
    InsufficientData { rank: usize, n: usize },

    #[error("corrupt data: {0}")]
    CorruptData(String),

    #[error("measurement budget violated: {0}")]
    Budget(String),

    #[error("strategy mismatch: expected `{expected}`, found `{found}`")]
    StrategyMismatch { expected: String, found: String },

    /// The generator has no exact mode; use `empirical_distribution` instead.
    #[error("generator has no exact distribution; fall back to empirical sampling")]
    NoExactMode,

    #[error("config error{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config { message: String, line: Option<usize> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config { message: message.into(), line: None }
    }
}
