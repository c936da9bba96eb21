use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown raw label {0:?}")]
    UnknownLabel(String),
    #[error("dataset has no `label` column")]
    MissingLabelColumn,
    #[error("dataset contains no valid rows")]
    EmptyDataset,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bins must be at least 2, got {0}")]
    BadBins(usize),
    #[error("k must be in 1..={d}, got {k}")]
    BadK { k: usize, d: usize },
    #[error("preprocess plan has not been fit")]
    PlanNotFit,
    #[error("class {class} has {count} samples; SMOTE needs at least 2")]
    ClassTooSmall { class: String, count: usize },
    #[error("bad split fractions: {0}")]
    BadFractions(String),
    #[error("no training data")]
    EmptyData,
    #[error("bad hyperparameter: {0}")]
    BadHyperparameter(String),
    #[error("training loss became non-finite at epoch {epoch} (loss = {loss})")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error("row {row} is not a probability distribution (sum = {sum})")]
    BadDistribution { row: usize, sum: f64 },
    #[error("bad ensemble weights: {0}")]
    BadWeights(String),
    #[error("step {0} does not divide 1 evenly")]
    BadStep(f64),
    #[error("background set is empty")]
    EmptyBackground,
    #[error("exact Shapley enumeration supports at most {max} features, got {got}")]
    TooManyFeatures { got: usize, max: usize },
    #[error("bad scenario spec: {0}")]
    BadSpec(String),
    #[error("event timestamp {got} precedes last ingested timestamp {last}")]
    TimeRegression { last: f64, got: f64 },
    #[error("bad event: {0}")]
    BadEvent(String),
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("class code {0} is outside 0..7")]
    BadCode(usize),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("unsupported format_version {got} (expected {expected})")]
    FormatVersion { got: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// The innermost error, looking through line annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            e => e,
        }
    }
}
