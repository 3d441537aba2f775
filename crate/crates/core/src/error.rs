use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point is not on the probability simplex: {0}")]
    NotOnSimplex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mirror step produced a non-finite value")]
    StepFailure,

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("environment episode is finished; call reset first")]
    EpisodeDone,

    #[error("tabular MDP too large for the exact oracle: {0}")]
    SizeLimit(String),

    #[error("value network required for the GAE estimator")]
    MissingValueNetwork,

    #[error("non-finite parameters at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid CSV input: {0}")]
    Csv(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
