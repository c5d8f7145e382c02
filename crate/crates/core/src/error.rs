use thiserror::Error;

/// Errors raised across the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coincident points: direction undefined")]
    CoincidentPoints,

    #[error("array size {0} is not a perfect square")]
    NonSquareArray(usize),

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("sensing direction lies in communication span")]
    SensingInCommSpan,

    #[error("matrix is not negative semidefinite (largest eigenvalue {0:e})")]
    NotNegativeSemidefinite(f64),

    #[error("UE {0} is unservable: zero effective channel gain")]
    Unservable(usize),

    #[error("SINR targets are infeasible under the power budget (best slack {0:e})")]
    SinrInfeasible(f64),

    #[error("unknown variant `{0}`")]
    UnknownVariant(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the failure is an SINR feasibility problem rather than a usage error.
    pub fn is_infeasibility(&self) -> bool {
        matches!(self, Error::SinrInfeasible(_) | Error::Unservable(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
