use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("vertex sets are not disjoint (shared vertex `{0}`)")]
    OverlappingSets(String),

    #[error("edge {from} -> {to} would create a directed cycle")]
    Cycle { from: String, to: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("orientation conflict: {0}")]
    Inconsistent(String),

    #[error("CI test {query} failed: {source}")]
    CiQuery {
        query: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by contradictory orientation requests.
    pub fn is_inconsistency(&self) -> bool {
        match self {
            Error::Inconsistent(_) => true,
            Error::CiQuery { source, .. } => source.is_inconsistency(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
