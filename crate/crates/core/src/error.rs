use thiserror::Error;

/// Errors produced by the numeric core and dataset tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("user id {user} out of range (n_users = {n_users})")]
    UserOutOfRange { user: usize, n_users: usize },

    #[error("item id {item} out of range (n_items = {n_items})")]
    ItemOutOfRange { item: usize, n_items: usize },

    #[error("duplicate rating for user {user}, item {item}")]
    DuplicateRating { user: usize, item: usize },

    #[error("rating set is empty")]
    EmptyRatings,

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("training diverged (non-finite values) at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("{path}:{line}: duplicate rating for user {user}, item {item}")]
    DuplicateRow {
        path: String,
        line: u64,
        user: u64,
        item: u64,
    },

    #[error("item count {k} out of range (1..={n_items})")]
    ItemCountOutOfRange { k: usize, n_items: usize },

    #[error("transcript has no round {round} (rounds = {rounds})")]
    RoundOutOfRange { round: usize, rounds: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
