use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Bloch vector has norm {norm} > 1 (unphysical state)")]
    OutsideBlochBall { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    NotNormalized { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("Kraus operators are incomplete: ‖Σ K†K − 1‖ = {deviation:e}")]
    IncompleteChannel { deviation: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("generator is not symmetric under exchange of the pair")]
    NotSwapSymmetric,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state left the Bloch ball at t = {time} (|u| = {norm}); reduce dt")]
    StepRejected { time: f64, norm: f64 },

    #[error("cannot fit an exponential rate: {0}")]
    DegenerateFit(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
