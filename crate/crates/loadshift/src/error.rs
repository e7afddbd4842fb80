use thiserror::Error;

/// Errors surfaced by scenario handling and the solver pipeline.
///
/// The three domain variants map onto distinct process exit codes in the CLI:
/// validation errors mean the input is malformed or out of contract,
/// infeasibility means the instance admits no assignment within the stated
/// capacities or targets, and internal errors flag a violated solver
/// invariant (most prominently a negative cycle in an exchange graph, which
/// can only happen if a decomposition was not optimal).
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
