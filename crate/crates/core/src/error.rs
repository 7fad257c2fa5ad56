use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed line in an input file; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vocabulary is empty after applying the document-frequency threshold")]
    EmptyVocabulary,

    #[error("document `{user_id}` has no in-vocabulary tokens")]
    EmptyDocument { user_id: String },

    #[error("corrupted model file: {0}")]
    ModelFormat(String),

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    ModelVersion { found: u64, supported: u64 },

    #[error("rank-deficient design matrix: column `{column}` is linearly dependent on the intercept and earlier columns")]
    RankDeficient { column: String },

    #[error("zero variance in `{0}`; correlation is undefined")]
    ZeroVariance(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An error raised while computing one cell of the experiment grid.
    #[error("[{feature_set}{}] {source}", k.map(|k| format!(" K={k}")).unwrap_or_default())]
    Cell {
        feature_set: String,
        k: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl std::fmt::Display,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}
