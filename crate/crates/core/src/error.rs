use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised anywhere in the index pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("missing close at line {line} (use forward fill to patch gaps)")]
    MissingValue { line: u64 },
    #[error("non-positive close {value} at line {line}")]
    NonPositivePrice { line: u64, value: f64 },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("series too short: have {have}, need at least {need}")]
    TooShort { have: usize, need: usize },
    #[error("series too short for embedding: have {have}, need at least {need}")]
    SeriesTooShort { have: usize, need: usize },
    #[error("too few points for window: have {have}, window {window}")]
    TooFewPoints { have: usize, window: usize },
    #[error("date axes disagree, first mismatch at {0}")]
    DateMisalignment(NaiveDate),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("max dimension {max_dim} must be below the point count {points}")]
    DimensionTooLarge { max_dim: usize, points: usize },
    #[error("filtration expanded to dimension {have}, homology in dimension {dim} needs {need}")]
    InsufficientExpansion { dim: usize, have: usize, need: usize },
    #[error("diagram contains an infinite pair")]
    InfinitePairPresent,
    #[error("diagrams have different homology dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("diagrams have {0} and {1} essential classes")]
    IncomparableEssentials(usize, usize),
    #[error("asset {asset} is constant over the correlation window")]
    ZeroVariance { asset: usize },
    #[error("indices share no common dates")]
    EmptyIntersection,
    #[error("k = {k} exceeds the number of rows ({rows})")]
    KTooLarge { k: usize, rows: usize },
    #[error("elbow selection needs at least 3 candidate k values, got {0}")]
    RangeTooSmall(usize),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("unknown index label {0:?}")]
    UnknownLabel(String),
    #[error("inputs are misaligned: {0}")]
    Misalignment(String),
    #[error("lookback {0} is too small (need at least 5)")]
    BadLookback(usize),
    #[error("quintile {0} is outside 1..=5")]
    BadQuintile(u8),
    #[error("index history has {have} values, strategy needs more than {need}")]
    InsufficientHistory { have: usize, need: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
