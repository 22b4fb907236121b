use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("division by zero")]
    DivisionByZero,

    #[error("valuation of zero is undefined")]
    ZeroValuation,

    #[error("alphabet mismatch")]
    AlphabetMismatch,

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("augmentation must be {expected}, found {found}")]
    Augmentation { expected: i64, found: String },

    #[error("degree {requested} exceeds truncation {truncation}")]
    TruncationExceeded { requested: usize, truncation: usize },

    #[error("{0} is not an l-adic unit")]
    NotUnit(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precision exhausted: {0}")]
    Precision(String),

    #[error("graded action on level {level} is not the expected scalar")]
    NonScalarGradedAction { level: usize },

    #[error("eigenvalue collision between levels {seed_level} and {level}")]
    EigenvalueCollision { seed_level: usize, level: usize },

    #[error("denominator cap violated at degree {degree}: observed {observed} > cap {cap}")]
    CapViolation { degree: usize, observed: i64, cap: i64 },

    #[error("weight level {level} out of range (max {max})")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("relation check failed: {0}")]
    RelationFailure(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
