use thiserror::Error;

use crate::weights::Classification;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),

    #[error("series evaluated beyond its radius of convergence (x = {x})")]
    BeyondRadius { x: f64 },

    #[error("series truncation bound {bound:e} exceeds tolerance {tol:e}")]
    Truncation { bound: f64, tol: f64 },

    #[error("weight sequence is {0:?}, a critical sequence is required")]
    NotCritical(Classification),

    #[error("inconsistent weights: {0}")]
    InconsistentWeights(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid encoding: {0}")]
    InvalidEncoding(String),

    #[error("no tree of the requested size exists: {0}")]
    LatticeInfeasible(String),

    #[error("gave up after {attempts} attempts ({accepted} accepted, empirical acceptance rate {rate:.3e})")]
    AttemptsExhausted { attempts: u64, accepted: u64, rate: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("root edge points away from the distinguished vertex; reverse the root edge to obtain a negative map")]
    PositiveMap,

    #[error("unsupported representation: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
