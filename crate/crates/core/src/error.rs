use std::path::PathBuf;

use thiserror::Error;

use crate::toxicity::ScoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("transcript contains no records")]
    EmptyEpisode,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing toxicity score for {0}")]
    MissingScore(String),

    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(&'static str),

    #[error("invalid interval [{start}, {end}) for signal of length {len}")]
    Interval { start: usize, end: usize, len: usize },

    #[error("signal of length {len} is too short (need at least {required})")]
    SignalTooShort { len: usize, required: usize },

    #[error("invalid signal: {0}")]
    Signal(String),

    #[error("scoring {context}: {source}")]
    Score {
        context: String,
        #[source]
        source: ScoreError,
    },

    #[error("stage `{stage}` requires `{}`; run `{upstream}` first", .missing.display())]
    StageOrder {
        stage: &'static str,
        upstream: &'static str,
        missing: PathBuf,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
