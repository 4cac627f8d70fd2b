use num_bigint::BigInt;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by the engine. Vertex indices are stored 0-based and
/// printed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("matrix is not square: row {} has {len} entries, expected {n}", .row + 1)]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("expected a vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("not a toppling matrix: {}", .0.join("; "))]
    NotToppling(Vec<String>),
    #[error("not a rate vector: {0}")]
    NotRateVector(String),
    #[error("not a configuration: entry {} is negative", .index + 1)]
    NegativeEntry { index: usize },
    #[error("vertex {} is out of range 1..={n}", .index + 1)]
    VertexOutOfRange { index: usize, n: usize },
    #[error("vertex {} is not critical", .vertex + 1)]
    NotCritical { vertex: usize },
    #[error("configuration is not stable")]
    NotStable,
    #[error("vector lies outside the stable box: entry {} of the image is negative", .index + 1)]
    OutsideStableBox { index: usize },
    #[error("index subset must be nonempty")]
    EmptySubset,
    #[error("toppling cap of {cap} exceeded; the matrix is not avalanche-finite")]
    ToppleCapExceeded { cap: u64 },
    #[error("fixed-point iteration did not settle within {cap} rounds")]
    IterationCap { cap: u64 },
    #[error("{what} has size {size}, over the budget of {budget}")]
    BudgetExceeded {
        what: &'static str,
        size: BigInt,
        budget: u64,
    },
}
