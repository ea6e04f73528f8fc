use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("joint observed space has {states} states, above the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: usize },

    #[error("parameter p({variable}={state} | column {column}) = {value} is not strictly positive")]
    NonPositiveParameter {
        variable: String,
        state: usize,
        column: usize,
        value: f64,
    },

    #[error("operation requires a latent class model (one hidden root with observed leaves)")]
    NotLatentClass,

    #[error("pairwise bound enumeration refused for {0} observed variables (limit 20)")]
    TooManyObserved(usize),

    #[error("operation requires binary variables, but {0} is not binary")]
    NotBinary(String),

    #[error("cardinality mismatch: {0}")]
    CardinalityMismatch(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset does not match model: {0}")]
    DataMismatch(String),

    #[error("negative expected count {0}")]
    NegativeCount(f64),

    #[error("rank estimate for {model} is unreliable: best singular gap {gap:.3e} over {draws} draws")]
    UnreliableRank { model: String, gap: f64, draws: usize },

    #[error("effective dimension paths disagree for {model}: decomposed {decomposed}, direct {direct}")]
    PathMismatch {
        model: String,
        decomposed: usize,
        direct: usize,
    },

    #[error("invalid cardinality range: {0}")]
    InvalidRange(String),

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by numerical rank ambiguity rather than by
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::UnreliableRank { .. } | Error::PathMismatch { .. })
    }
}
