use alloc::string::String;

use thiserror::Error;

/// Errors raised by the construction and checking routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown irrep label `{0}` for this group")]
    UnknownLabel(String),
    #[error("a Lie group has infinitely many irreps; a truncation is required")]
    UntruncatedLieGroup,
    #[error("operation is not applicable to this group: {0}")]
    NotApplicable(&'static str),
    #[error("operation requires a finite group")]
    FiniteGroupOnly,
    #[error("operation requires SU(2)")]
    Su2Only,
    #[error("operation requires a Lie group backend")]
    LieGroupOnly,
    #[error("transform is only complete when every irrep is kept")]
    IncompleteTruncation,
    #[error("no pair of kept irreps is connected by a nonvanishing Clebsch-Gordan coefficient")]
    EmptyResult,
    #[error("parameter key is not fusion-admissible: {0}")]
    InadmissibleFusionKey(String),
    #[error("virtual legs do not match: {0}")]
    LegMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension {dim} exceeds the limit {limit}")]
    TooLarge { dim: u128, limit: u128 },
    #[error("contracted state vanishes identically")]
    EmptyState,
}

pub type Result<T> = core::result::Result<T, Error>;
