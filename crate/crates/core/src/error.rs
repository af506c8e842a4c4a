use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NmpcError {
    #[error("control sequence has {found} entries, horizon is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("brute-force grid needs {evaluations} evaluations, limit is {limit}")]
    ProblemTooLarge { evaluations: u128, limit: u128 },
    #[error("controller already terminated")]
    Terminated,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = NmpcError> = std::result::Result<T, E>;
