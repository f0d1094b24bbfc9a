use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] regpave_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: u64, expected: usize, found: usize },

    #[error("no data points in input")]
    EmptyInput,

    #[error("unknown reference density {0:?}")]
    UnknownReference(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed histogram file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
