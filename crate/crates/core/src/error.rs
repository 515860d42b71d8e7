use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("depth {depth} exceeds the supported maximum {max}")]
    DepthTooLarge { depth: u32, max: u32 },

    #[error("expected {expected} values for depth {depth}, got {actual}")]
    LengthMismatch {
        depth: u32,
        expected: usize,
        actual: usize,
    },

    #[error("dyadic index (level {level}, pos {pos}) is out of range")]
    InvalidIndex { level: u32, pos: u64 },

    #[error("coefficient at level {level} does not fit in depth {depth}")]
    CoefficientOutOfDepth { level: u32, depth: u32 },

    #[error("fractional parameter s = {0} must lie strictly inside (0, 1)")]
    InvalidSmoothness(f64),

    #[error("{op} supports depth at most {max}, got {depth}")]
    DepthExceeded {
        op: &'static str,
        depth: u32,
        max: u32,
    },

    #[error("{op} requires a nonnegative function, found value {value}")]
    NegativeInput { op: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
