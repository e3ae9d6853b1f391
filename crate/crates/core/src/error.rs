use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid step value {0}: steps must be -1 or +1")]
    InvalidStep(i64),

    #[error("invalid sign character {0:?}: expected '+' or '-'")]
    InvalidSign(char),

    #[error("N must be divisible by 4 (got {0}); the walk and its area return to (0, 0) only at multiples of 4")]
    NotMultipleOfFour(usize),

    #[error("N must be even (got {0})")]
    OddHorizon(usize),

    #[error("conditioning on a null event: {0}")]
    NullConditioning(String),

    #[error("pin ({s}, {a}) is not reachable at horizon {n}")]
    UnreachablePin { n: usize, s: i64, a: i64 },

    #[error("horizon {n} exceeds the {kind} budget of {budget}")]
    BudgetExceeded {
        kind: &'static str,
        n: usize,
        budget: usize,
    },

    #[error("the walk never reaches level {0}")]
    LevelNotReached(i64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
