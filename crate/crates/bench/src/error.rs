use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] tsdg::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse {path}: {reason}")]
    Parse { path: String, reason: String },

    #[error("{0}")]
    Recall(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
