use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An index or length beyond a supported range or a materialisation guard.
    #[error("range error: {0}")]
    Range(String),

    /// A violated precondition on the arguments of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A point outside the domain of a map.
    #[error("domain error: {0}")]
    Domain(String),

    /// An orbit left the domain of the map at the given iterate.
    #[error("orbit escaped the domain at iterate {index}")]
    Escape { index: usize },

    /// The operation is not decidable for this sequence rule.
    #[error("unsupported rule: {0}")]
    Unsupported(String),

    /// Exact arithmetic exceeded its size guard.
    #[error("precision guard exceeded after verifying depth {last_verified_depth}")]
    Precision { last_verified_depth: usize },

    /// Backward refinement produced an empty set.
    #[error("no point has the itinerary {0}")]
    NoPoint(String),

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse { position, message: message.into() }
    }
}
