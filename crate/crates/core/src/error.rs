use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violates its invariant. `field` is a dotted path.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical instability at node {node} (state {state:?}) in iteration {iteration}: value {value}")]
    Instability { node: usize, state: Vec<f64>, iteration: usize, value: f64 },

    #[error("state {state:?} is outside the grid domain: {reason}")]
    OutOfDomain { state: Vec<f64>, reason: String },

    #[error("trajectory payoff of an empty trace")]
    EmptyTrace,

    #[error("value field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }
}
