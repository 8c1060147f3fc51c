use std::path::PathBuf;

use crate::graph::UserId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("risk score magnitude {0} is outside [0, 1]")]
    InvalidMagnitude(f64),
    #[error("timestamp {0} is negative")]
    NegativeTime(i64),
    #[error("graph is empty after filtering contacts")]
    EmptyGraph,
    #[error("cannot split {users} users among {actors} actors")]
    TooManyActors { actors: usize, users: usize },
    #[error("actor count must be at least 1")]
    NoActors,
    #[error("user {0} is not part of the partition")]
    UnknownUser(UserId),
    #[error("message for user {user} was routed to actor {actor}, which does not own it")]
    Routing { user: UserId, actor: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("actor {actor} failed: {reason}")]
    ActorFailed { actor: usize, reason: String },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("{path}: expected column `{expected}`, found `{found}`")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{0}: file contains no records")]
    EmptyInput(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}
