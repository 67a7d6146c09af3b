use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {required} observation rows, got {actual}")]
    TooFewRows { required: usize, actual: usize },

    #[error("non-positive price {value} at row {row}, column {col}")]
    NonPositivePrice { row: usize, col: usize, value: f64 },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("node {index} has zero variance")]
    ZeroVarianceNode { index: usize },

    #[error("all observations are identical; sample covariance is zero")]
    DegenerateData,

    #[error("split of {n} rows at fraction {fraction} leaves a part with fewer than 2 rows")]
    SplitTooSmall { n: usize, fraction: f64 },

    #[error("symmetric eigendecomposition did not converge")]
    DecompositionFailure,

    #[error("spectra have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid eigenvalue band [{low}, {high}] for dimension {p}")]
    InvalidBand { low: usize, high: usize, p: usize },

    #[error("no eigenvalue of the target exceeds the Marchenko-Pastur edge {upper}")]
    NoDeviatingEigenvalues { upper: f64 },

    #[error("need at least 2 nodes to form a network, got {p}")]
    InsufficientDimensions { p: usize },

    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("weight {weight} on edge ({source_label}, {target_label}) is not a correlation in [-1, 1]")]
    WeightOutOfRange { source_label: String, target_label: String, weight: f64 },

    #[error("networks are defined on different node sets")]
    NodeSetMismatch,

    #[error("true network has no edges")]
    EmptyTruth,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
