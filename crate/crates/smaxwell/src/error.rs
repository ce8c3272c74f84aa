use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid seed profile: {0}")]
    InvalidProfile(String),
    #[error("convexity gap violation: gap={gap:e} at x={x:?}, y={y:?}")]
    GapViolation { gap: f64, x: Vec<f64>, y: Vec<f64> },
    #[error("no sign change along ray after {doublings} doublings (last t={last_t:e}, value={last_value:e})")]
    FarPointNotFound {
        doublings: usize,
        last_t: f64,
        last_value: f64,
    },
    #[error("malformed field dump: {0}")]
    MalformedDump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
