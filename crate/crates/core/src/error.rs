use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("grid index {index} out of range for a grid of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("{chains} RF chains exceed the {antennas} available antennas")]
    TooManyRfChains { chains: usize, antennas: usize },
    #[error("analog bank entry has modulus {found}, expected {expected}")]
    NotPhaseOnly { expected: f64, found: f64 },
    #[error("snapshot set is empty")]
    EmptySnapshots,
    #[error("every dictionary column is excluded")]
    AllColumnsExcluded,
    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("reference covariance is zero")]
    ZeroReference,
    #[error("subspace rank {rank} is invalid for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
