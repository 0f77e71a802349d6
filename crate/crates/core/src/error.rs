use thiserror::Error;

pub type Result<T, E = PlannerError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate point: first derivative magnitude {magnitude:e} at u = {u}")]
    DegeneratePoint { u: f64, magnitude: f64 },

    #[error("infeasible velocity profile: {0}")]
    InfeasibleProfile(String),

    #[error("kernel matrix is not positive definite even with jitter {jitter:e}")]
    IllConditioned { jitter: f64 },

    #[error("database is empty")]
    EmptyDatabase,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("database write failed: {0}")]
    DatabaseWrite(#[source] std::io::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PlannerError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PlannerError::InvalidInput(msg.into())
    }
}
