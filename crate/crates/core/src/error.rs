use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column '{column}': non-finite value '{value}'")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("column '{0}' has zero variance")]
    ZeroVariance(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),

    #[error(
        "no delta bin holds at least {min_count} pairs (largest count {best}); \
         use a larger dataset or a smaller min_count"
    )]
    InsufficientStatistics { min_count: u64, best: u64 },

    #[error("degenerate probability curve: {0}")]
    DegenerateCurve(String),

    #[error("collinear regressors (condition estimate {condition:.3e}): {columns:?}")]
    Collinear {
        condition: f64,
        columns: Vec<String>,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "trajectory diverged at step {step} (|state| = {magnitude:.3e}); check the map parameters"
    )]
    Diverged { step: usize, magnitude: f64 },

    #[error("integration failed at t = {t}: step size underflow ({step:e})")]
    StepUnderflow { t: f64, step: f64 },
}
