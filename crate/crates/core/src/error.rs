use thiserror::Error;

pub type Result<T, E = HermanError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HermanError {
    #[error("token count {0} must be odd and at least 1")]
    InvalidTokenCount(usize),

    #[error("{0} must be odd and at least {1}, got {2}")]
    InvalidOddParameter(&'static str, usize, usize),

    #[error("gap vector is empty or sums to zero")]
    EmptyRing,

    #[error("gap {index} must be positive in a canonical gap vector")]
    NonCanonical { index: usize },

    #[error("gap vector sums to {actual}, expected {expected}")]
    SumMismatch { expected: u64, actual: u64 },

    #[error("gap at index {index} is {value}, expected 0")]
    NonZeroGap { index: usize, value: u64 },

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("move support must be strictly increasing with even size")]
    InvalidSupport,

    #[error("move would drive gap {index} below zero")]
    MoveUnderflow { index: usize },

    #[error("invalid ring state: {0}")]
    InvalidState(String),

    #[error("coin pattern has {actual} entries for {expected} tokens")]
    CoinCountMismatch { expected: usize, actual: usize },

    #[error("run exceeded the step limit of {limit}")]
    StepLimit { limit: u64 },

    #[error("trial {trial}: run exceeded the step limit of {limit}")]
    TrialStepLimit { trial: u64, limit: u64 },

    #[error("state space of {count} states exceeds the limit of {limit}")]
    StateSpaceTooLarge { count: u64, limit: u64 },

    #[error("{m} tokens exceed the exhaustive enumeration limit of {limit}")]
    TooManyTokens { m: usize, limit: usize },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
