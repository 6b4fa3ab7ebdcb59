use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not orthogonal (max |QᵀQ − I| = {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("planted directions are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("matrix is not symmetric (max |A − Aᵀ| = {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("infeasible angle configuration: {0}")]
    InfeasibleConfiguration(String),

    #[error("dense materialization of an n = {n} matrix exceeds the limit {limit}")]
    MaterializationLimit { n: usize, limit: usize },

    #[error("matrix family is empty")]
    EmptyFamily,

    #[error("malformed matrix spec: {0}")]
    MatrixSpec(String),

    #[error("malformed estimator spec: {0}")]
    EstimatorSpec(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
