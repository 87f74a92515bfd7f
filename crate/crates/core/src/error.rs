use thiserror::Error;

/// Errors raised across the planning toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Two states (or a state and a world) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Rejection sampling of free space ran out of attempts.
    #[error("no free state found after {0} rejection attempts")]
    InfeasibleSpace(usize),

    /// Rejection sampling of the informed set intersected with free space ran out of attempts.
    #[error("no free state inside the informed set after {0} rejection attempts")]
    InfeasibleFocus(usize),

    /// A problem generator could not produce a valid instance.
    #[error("problem generation failed: {0}")]
    Generation(String),

    /// Grid search was asked to start or finish inside an occupied cell.
    #[error("grid endpoint {0:?} is occupied or out of range")]
    OccupiedEndpoint(Vec<i64>),

    /// Not enough candidates could be drawn to build a point cloud.
    #[error("degenerate point-cloud domain: obtained {got} of {wanted} candidates")]
    DegenerateDomain { got: usize, wanted: usize },

    /// The guidance provider failed or returned an unusable answer.
    #[error("guidance unavailable: {0}")]
    GuidanceUnavailable(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
