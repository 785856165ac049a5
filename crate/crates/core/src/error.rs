use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimensions must be positive (got {rows}x{cols})")]
    EmptyDimension { rows: usize, cols: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("target norm must be positive, got {0}")]
    NonPositiveTarget(f64),

    #[error("not a simplex vector: {0}")]
    NotSimplex(String),

    #[error("negative initial regret at coordinate {0}")]
    NegativeInitialRegret(usize),

    #[error("protocol violation: {0}")]
    Protocol(&'static str),

    #[error("gamma solver did not terminate within {0} rounds")]
    NoTermination(usize),

    #[error("malformed game tree: {0}")]
    MalformedTree(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
