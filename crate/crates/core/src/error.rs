use crate::types::AggregationLevel;

/// Error type shared by every pipeline stage.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Career co-occurrence is only meaningful on individual careers;
    /// aggregated entities span too many fields for the conditional
    /// probabilities to say anything about a person's reach.
    #[error("co-occurrence is defined on author careers, got {0} level")]
    NotAuthorLevel(AggregationLevel),

    #[error("aggregation level mismatch: {0} vs {1}")]
    LevelMismatch(AggregationLevel, AggregationLevel),

    #[error("field index mismatch: {0}")]
    FieldIndexMismatch(String),

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("empty evaluation set")]
    EmptyEvaluationSet,
}

pub type Result<T> = std::result::Result<T, Error>;
