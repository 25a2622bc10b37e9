use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GiemError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("point {x} outside domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("degenerate interval: {0}")]
    Degenerate(String),
    #[error("invalid permutation pair: {0}")]
    InvalidPerm(String),
    #[error("reducible permutation pair")]
    Reducible,
    #[error("image intervals do not tile the domain: {0}")]
    TilingGap(String),
    #[error("branch is not increasing: {0}")]
    NonMonotone(String),
    #[error("incompatible length vectors: {0}")]
    IncompatibleLengths(String),
    #[error("map is not invertible: {0}")]
    NotInvertible(String),
    #[error("connection suspected at level {level}: compared lengths tie within tolerance")]
    Tie { level: usize },
    #[error("precision exhausted at level {level}: {reason}")]
    PrecisionExhausted { level: usize, reason: String },
    #[error("memory budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no sign change of the mean nonlinearity over the bracket")]
    NoSignChange,
    #[error("step window too short to decide k-boundedness")]
    WindowTooShort,
    #[error("point {0} lies on a cylinder boundary")]
    BoundaryPoint(f64),
    #[error("iteration limit {0} exceeded")]
    MaxIterations(usize),
    #[error("inadmissible word: {0}")]
    Inadmissible(String),
    #[error("no admissible pairs to compare")]
    NoValidPairs,
    #[error("map has {0} discontinuities, expected exactly one")]
    Discontinuities(usize),
    #[error("fit needs at least 4 positive values, got {0}")]
    TooFewPoints(usize),
    #[error("level {0} not available in trace")]
    LevelOutOfRange(usize),
    #[error("consistency failure: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, GiemError>;
