use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration has {got} joints, robot has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("joint {joint} angle {angle} outside limits [{lo}, {hi}]")]
    JointLimit { joint: usize, angle: f64, lo: f64, hi: f64 },
    #[error("invalid robot model: {0}")]
    InvalidModel(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("time {t} outside [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error("instance generation failed: {0}")]
    Generation(String),
    #[error("malformed path: {0}")]
    MalformedPath(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
