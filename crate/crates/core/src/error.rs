use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("rejection sampler exhausted its budget of {attempts} attempts for (r, s) = ({r}, {s})")]
    SamplingBudget { r: usize, s: usize, attempts: usize },

    #[error("construction rejected: {0}")]
    Construction(String),

    #[error("enumeration budget exceeded at error weight {weight}: {needed} entries > limit {limit}")]
    BudgetExceeded {
        weight: usize,
        needed: u128,
        limit: u128,
    },

    #[error("no logical operator found after {trials} trials")]
    NoLogicalFound { trials: usize },

    #[error("schedule collision at timestep {timestep} on qubit {qubit}")]
    Collision { timestep: usize, qubit: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("syndrome is not in the column space of the check matrix")]
    Unsatisfiable,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
