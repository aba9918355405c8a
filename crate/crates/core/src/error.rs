use edgeprice_lp::{LpError, Status};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver returned status `{0}`; no solution to extract")]
    NoSolution(Status),
    #[error("numerical integrity: {0}")]
    NumericalIntegrity(String),
    #[error("reformulation unsound: {0}")]
    ReformulationUnsound(String),
    #[error("candidate budget exceeded: {required} candidates needed, limit {limit}")]
    CandidateBudget { required: u128, limit: u128 },
    #[error("external solver: {0}")]
    External(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
