use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by target construction, simulation, weight learning and the runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported dimension {dim}: quadrature oracles are limited to d <= 2")]
    UnsupportedDimension { dim: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite log-density at level {level}, x = {x:?}, clock = {clock}")]
    NonFinite {
        level: usize,
        x: Vec<f64>,
        clock: f64,
    },

    #[error("estimation at level {level} needs {required} samples there, got {hits}")]
    InsufficientHits {
        level: usize,
        hits: usize,
        required: usize,
    },

    #[error("non-finite estimator ratio at level {level}")]
    NonFiniteEstimate { level: usize },

    #[error("level {level} was never visited during rebalancing (starved level)")]
    StarvedLevel { level: usize },

    #[error("stage {stage} of level {level}: {source}")]
    Stage {
        level: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, level: usize, stage: &'static str) -> Self {
        Error::Stage {
            level,
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
