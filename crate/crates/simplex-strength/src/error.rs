//! Crate-wide error type.

/// Errors produced by simplex construction, metric checks, and bound tables.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed input data (wrong shape, non-finite values, asymmetry, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An argument violates an operation's contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Distance matrix is not realizable by points in Euclidean space of the
    /// stated dimension: the squared volume came out negative beyond the
    /// rounding guard.
    #[error(
        "distances not realizable in {dim} dimensions: squared volume {value:e} is below -{guard:e}"
    )]
    InvalidMetric { dim: usize, value: f64, guard: f64 },

    /// Point outside the normalized-triangle parameter region.
    #[error("point ({x}, {y}) lies outside the normalized-triangle region")]
    OutOfDomain { x: f64, y: f64 },

    /// Exact integer computation exceeded the 128-bit range.
    #[error("rencontre number overflows 128 bits for n = {0} (largest supported n is 34)")]
    Overflow(u32),
}

pub type Result<T> = std::result::Result<T, Error>;
