use thiserror::Error;

/// Errors raised by the simulator and its file formats.
#[derive(Debug, Error)]
pub enum RnbsError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("size guard: {what} of {size} exceeds the limit of {limit}")]
    SizeGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot post-select: success probability {probability:e} is below {threshold:e}")]
    CannotPostselect { probability: f64, threshold: f64 },

    #[error("photon number not conserved: {input} in, {output} out")]
    Conservation { input: usize, output: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("matrix is not unitary: defect {defect:e} exceeds {tolerance:e}")]
    NotUnitary { defect: f64, tolerance: f64 },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RnbsError {
    /// Process exit code for the command-line front end: 1 for errors in what
    /// the user asked for, 2 for numerical, guard, or I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RnbsError::InvalidDimension(_)
            | RnbsError::Domain(_)
            | RnbsError::InvalidConfig(_)
            | RnbsError::Format(_)
            | RnbsError::Json(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, RnbsError>;
