use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix: pivot {pivot:e} in column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("{solver} did not converge after {iterations} iterations (mismatch {mismatch:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        mismatch: f64,
    },

    #[error("network is not radial")]
    NotRadial,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn at_step(step: usize, source: Error) -> Self {
        Error::Step {
            step,
            source: Box::new(source),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
