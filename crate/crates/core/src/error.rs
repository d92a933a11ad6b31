use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing observation for index {index:?} at l = {l}")]
    MissingObservation { index: Vec<i64>, l: usize },
    #[error("missing coefficient for index {0:?}")]
    MissingCoefficient(Vec<i64>),
    #[error("missing upstream artifact {path}: run `{producer}` first")]
    Dependency { path: PathBuf, producer: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
