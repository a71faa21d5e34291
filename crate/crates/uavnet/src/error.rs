//! Crate-wide error type.

/// Errors surfaced by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a mathematical precondition (negative distance,
    /// non-finite input, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value or combination is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// The replay buffer does not yet hold enough transitions to sample a
    /// mini-batch; the caller skips the gradient step.
    #[error("replay buffer not ready: holds {have} transitions, need {need}")]
    NotReady { have: usize, need: usize },

    /// Input is structurally valid but degenerate for the requested
    /// operation (e.g. fewer distinct points than clusters).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Training produced a non-finite loss or gradient.
    #[error("training error: {0}")]
    Training(String),

    /// A record file failed to parse; `row` is the 1-based data row.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
