use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("step size underflow at time {time}")]
    StepFailure { time: f64 },
    #[error("non-finite state at time {time}")]
    NonFinite { time: f64 },
    #[error("jump applied outside the jump set: {0}")]
    GuardViolation(String),
    #[error("flow set violated: {0}")]
    FlowSet(String),
    #[error("invalid jump schedule: {0}")]
    Schedule(String),
    #[error("infeasible switching policy: {0}")]
    InfeasiblePolicy(String),
    #[error("dwell-time constant too small: decay rate {lambda} is not positive")]
    InvalidDwell { lambda: f64 },
    #[error("scenario build failed: {0}")]
    Build(String),
    #[error("unknown scenario '{0}' (valid: consensus, intermittent, nesmr, ptpsg)")]
    UnknownScenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                return Error::Io(io);
            }
            unreachable!();
        }
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
