use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported grid: dim={dim}, points_per_axis={n} (dim must be 1 or 2, n a power of two >= 4)")]
    InvalidGrid { dim: usize, n: usize },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside coefficient interval [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("operator is not hyperbolic at t={t}, grid index {index}: {detail}")]
    NotHyperbolic { t: f64, index: usize, detail: String },

    #[error("CFL violation: dt={dt} exceeds limit {limit} (cfl={cfl}, c_max={c_max})")]
    CflViolation { dt: f64, limit: f64, cfl: f64, c_max: f64 },

    #[error("solution blew up at t={t} (non-finite or above {limit:e})")]
    BlowUp { t: f64, limit: f64 },

    #[error("positivity violated: gap {gap} < required {required} (trial {trial})")]
    PositivityViolation { gap: f64, required: f64, trial: usize },

    #[error("unknown coefficient family `{0}`")]
    UnknownFamily(String),

    #[error("missing calibration entry `{0}`")]
    MissingCalibration(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Format { path: path.into(), reason: reason.to_string() }
    }

    pub(crate) fn param(name: &'static str, reason: impl ToString) -> Self {
        Error::InvalidParameter { name, reason: reason.to_string() }
    }
}
