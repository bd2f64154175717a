use thiserror::Error;

/// Errors raised by the spike recovery library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input parameter is outside the operation's domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A dense linear system could not be solved reliably.
    #[error("numerically singular system ({context}), condition estimate {condition:.3e}")]
    Singular { context: String, condition: f64 },

    /// An iterative procedure stopped without meeting its target.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
