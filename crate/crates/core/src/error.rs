use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("degenerate scaler: feature `{0}` is constant over the training split")]
    DegenerateScaler(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("split needs at least 5 blocks, got {0}")]
    TooFewBlocks(usize),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("model blob: {0}")]
    ModelFormat(String),

    #[error("model mode mismatch: {0}")]
    ModeMismatch(&'static str),

    #[error("nothing to export: {0}")]
    NothingToExport(&'static str),

    #[error("GTFS feed is missing required file `{0}`")]
    MissingFile(String),

    #[error("GTFS {file}: {reason}")]
    Gtfs { file: String, reason: String },

    #[error("config {path}:{line}: {reason}")]
    Config { path: String, line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Zip(#[from] zip::result::ZipError),

    #[error(transparent)]
    StdIo(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { what, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
