use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("relation `{relation}` has arity {expected}, found {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate relation `{0}` in schema")]
    DuplicateRelation(String),

    #[error("operands are over different schemas")]
    SchemaMismatch,

    #[error("resource limit exceeded: {what} (limit {limit})")]
    LimitExceeded { what: String, limit: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn limit(what: impl Into<String>, limit: u64) -> Self {
        Error::LimitExceeded {
            what: what.into(),
            limit,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self, Error::LimitExceeded { .. })
    }
}
