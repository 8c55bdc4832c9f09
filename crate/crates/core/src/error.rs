use thiserror::Error;

/// Errors raised by state construction, divergences and the optimizing measures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m_ij - conj(m_ji)| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    NotUnitTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("matrix is not unitary (max |(U^dag U - I)_ij| = {0:e})")]
    NotUnitary(f64),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subsystem index {index} out of range for {count} subsystems")]
    BadSubsystemIndex { index: usize, count: usize },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("bad state recipe: {0}")]
    BadRecipe(String),

    #[error("distributions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("support violation: first argument has weight outside the support of the second")]
    SupportViolation,

    #[error("bad dimension {0}")]
    BadDimension(usize),

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("operation needs at least two subsystems")]
    SingleSubsystem,

    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for bad input, 3 for optimizer failure,
    /// 4 for an internal numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::OptimizerFailure(_) => 3,
            Error::EigenFailure | Error::NonFinite => 4,
            _ => 2,
        }
    }
}
