use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("aggregation weights sum to zero")]
    DegenerateWeights,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite function value at coordinate {coordinate}")]
    NonFiniteEvaluation { coordinate: usize },

    #[error("divergence detected in round {round}: {quantity} = {value:e}")]
    DivergenceDetected {
        round: usize,
        quantity: &'static str,
        value: f64,
    },

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("no rows left after filtering missing values")]
    EmptyAfterFiltering,

    #[error("too few samples: {samples} samples for {clients} clients")]
    TooFewSamples { samples: usize, clients: usize },

    #[error("label {label} has {available} samples left, client {client} needs {needed}")]
    InsufficientClassSamples {
        label: u8,
        client: usize,
        needed: usize,
        available: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown configuration key `{key}` (line {line})")]
    UnknownConfigKey { key: String, line: usize },

    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),

    #[error("centralized solver stopped after {} iterations with gradient norm {:e}", .0.iterations, .0.grad_norm)]
    NoConvergence(Box<crate::harness::OracleSolution>),

    #[error("malformed metrics file {}: {reason}", path.display())]
    MalformedMetrics { path: PathBuf, reason: String },

    #[error("round {round}: {source}")]
    InRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::DegenerateWeights => "DegenerateWeights",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyDataset => "EmptyDataset",
            Error::NonFiniteEvaluation { .. } => "NonFiniteEvaluation",
            Error::DivergenceDetected { .. } => "DivergenceDetected",
            Error::FileNotFound(_) => "FileNotFound",
            Error::MalformedRow { .. } => "MalformedRow",
            Error::EmptyAfterFiltering => "EmptyAfterFiltering",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::InsufficientClassSamples { .. } => "InsufficientClassSamples",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::UnknownConfigKey { .. } => "UnknownConfigKey",
            Error::IncomparableRuns(_) => "IncomparableRuns",
            Error::NoConvergence(_) => "NoConvergence",
            Error::MalformedMetrics { .. } => "MalformedMetrics",
            Error::InRound { source, .. } => source.kind(),
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    pub fn in_round(self, round: usize) -> Self {
        match self {
            e @ (Error::InRound { .. } | Error::DivergenceDetected { .. }) => e,
            e => Error::InRound {
                round,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn dim(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
