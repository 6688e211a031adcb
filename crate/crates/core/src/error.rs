use thiserror::Error;

/// Every failure mode of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, representations or grids do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// A symbol is not finite on a lattice point that carries energy.
    #[error("singular symbol at lattice point {point:?}: {detail}")]
    Singularity { point: Vec<i64>, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("index out of representable range: {0}")]
    Range(String),

    /// An iteration failed to settle; `history` holds the monitored quantity per iterate.
    #[error("no convergence: {detail} (last {} iterates recorded)", history.len())]
    Convergence { detail: String, history: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn structural<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structural(msg.into()))
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
