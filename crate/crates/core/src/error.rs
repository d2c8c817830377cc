use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("path-loss distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("channel matrix is rank deficient (smallest/largest singular value {ratio:.3e})")]
    SingularChannel { ratio: f64 },

    #[error("K exceeds antenna count ({users} users, {antennas} antennas)")]
    TooManyUsers { users: usize, antennas: usize },

    #[error("entry {index} is not unit modulus (|x| = {modulus})")]
    NotUnitModulus { index: usize, modulus: f64 },

    #[error("exhaustive search over 2^{exponent} candidates exceeds the 2^20 limit")]
    InstanceTooLarge { exponent: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trial aborted: {attempts} consecutive singular channel draws")]
    ResampleLimit { attempts: usize },
}
