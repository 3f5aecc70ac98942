use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop at vertex {0} is not allowed in a simple graph")]
    SelfLoop(usize),

    #[error("operation needs at least {required} vertices, graph has {n}")]
    TooFewVertices { n: usize, required: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degree sequence is not graphical")]
    NotGraphical,

    #[error("{what}: retry budget of {budget} attempts exhausted")]
    RetryBudgetExhausted { what: String, budget: usize },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("percentile curve is not non-decreasing at index {0}")]
    NonMonotoneCurve(usize),

    #[error("history contains coincident time stamps")]
    CoincidentTimes,

    #[error("not enough usable data points: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("lifting failed in CPI cycle {cycle}: {source}")]
    CycleLift {
        cycle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("failed to parse {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error("config file {path}: {detail}")]
    Config { path: PathBuf, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that originate in degree-sequence lifting, including
    /// the wrapped form produced inside CPI cycles.
    pub fn is_lift_failure(&self) -> bool {
        match self {
            Error::RetryBudgetExhausted { .. } | Error::NotGraphical => true,
            Error::CycleLift { source, .. } => source.is_lift_failure(),
            _ => false,
        }
    }
}
