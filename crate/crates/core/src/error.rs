use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected} values, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("constant feature column `{0}` cannot be standardized")]
    ConstantFeature(String),

    #[error("constant target cannot be rescaled to [0, 1]")]
    ConstantTarget,

    #[error("{path}: row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumericCell { path: PathBuf, row: usize, column: String, value: String },

    #[error("{path}: no column named `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{0}: file has no data rows")]
    EmptyFile(PathBuf),

    #[error("exact Shapley enumeration refused for d = {dim} (limit {limit}); use shapley-sampled instead")]
    TooManyFeatures { dim: usize, limit: usize },

    #[error("no flooding level reaches the target {target}; attainable range is [{min}, {max}]")]
    NoFloodSolution { target: f64, min: f64, max: f64 },

    #[error("restructuring needs a ReLU hidden layer followed by a linear output layer: {0}; retrain instead")]
    Structure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("division by a near-zero value: {0}")]
    Division(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
