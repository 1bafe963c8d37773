use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown game spec `{0}`")]
    UnknownGame(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("public partition is not closed: {0}")]
    PublicPartition(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("unreachable public state `{0}`")]
    UnreachablePublicState(String),
    #[error("missing value estimate for infoset `{0}`")]
    MissingValue(String),
    #[error("strategy key mismatch: {0}")]
    KeyMismatch(String),
    #[error("agent out of sync: {0}")]
    Desync(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("partial strategy: {0}")]
    PartialStrategy(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
