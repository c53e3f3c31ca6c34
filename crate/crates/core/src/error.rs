use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while loading data, training or evaluating.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: not valid UTF-8")]
    Encoding { path: PathBuf },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset `{0}` is empty after cleaning")]
    EmptyCorpus(String),

    #[error("cannot build {k} folds: corpus `{label}` has {vulnerable} vulnerable and {benign} benign names")]
    TooFewForFolds {
        label: String,
        k: usize,
        vulnerable: usize,
        benign: usize,
    },

    #[error("invalid protocol: {0}")]
    Protocol(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("external score for `{term}` is {score}, outside [0, 1]")]
    ScoreOutOfRange { term: String, score: f64 },

    #[error("term `{0}` is scored more than once")]
    DuplicateTerm(String),

    #[error("term `{term}` is not accepted by the name model: {reason}")]
    UnscorableTerm { term: String, reason: String },

    #[error("synthetic corpus: {0}")]
    Synth(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by an infeasible evaluation protocol (too few
    /// names for the requested folds, duplicate project labels).
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::TooFewForFolds { .. } | Error::Protocol(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
