use alloc::string::String;

use crate::domain::StatCategory;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("scoring rules have no entry for `{0}`, which is nonzero in this line")]
    MissingRule(StatCategory),

    #[error("need {needed} distinct players in season {season}, found {available} (short by {})", needed - available)]
    InsufficientPlayers {
        season: i32,
        needed: usize,
        available: usize,
    },

    #[error("invalid record {key}: {reason}")]
    InvalidRecord { key: String, reason: String },

    #[error("duplicate key {0}")]
    DuplicateKey(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("training seasons contain no first-year quarterback games; supply a rookie baseline explicitly")]
    NoRookies,

    #[error("{0} partition is empty")]
    EmptyPartition(&'static str),

    #[error("training diverged: non-finite loss in epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("{0} requires a linear kernel")]
    LinearKernelRequired(&'static str),

    #[error("problem too large for the reference fitter: {0}")]
    TooLarge(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}
