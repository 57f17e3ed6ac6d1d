use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An optional oracle or constant needed by the requested operation is absent.
    #[error("missing requirement: {0}")]
    MissingRequirement(String),

    /// Step-size parameters violate the hypothesis of the corresponding rate theorem.
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    /// A user or builder oracle returned a value inconsistent with its contract.
    #[error("oracle contract violated: {0}")]
    OracleContract(String),

    #[error("non-finite coupling value while differencing coordinate {block}[{index}]")]
    NonFinite { block: char, index: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
