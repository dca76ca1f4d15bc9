use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the domain of the operation (NaN, infinity, empty sample).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A construction constant failed one of the named admissibility clauses.
    #[error("invalid parameters, clause ({clause}): {detail}")]
    InvalidParams { clause: &'static str, detail: String },

    #[error("ambient bound {m} cannot host a member; need m >= {min_m}")]
    Capacity { m: u64, min_m: u64 },

    /// The cluster scan ran out of coordinates. `bound` is the pigeonhole
    /// count that guarantees success.
    #[error("no cluster of size {target} among {scanned} coordinates; pigeonhole-sufficient m is {bound:e}")]
    NeedLargerM { target: usize, scanned: usize, bound: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An inequality that the construction guarantees did not hold. Seeing this
    /// means a bug or invalid parameters slipped through validation.
    #[error("construction violated: {0}")]
    ConstructionViolation(String),

    #[error("configuration error: {0}")]
    Config(String),
}
