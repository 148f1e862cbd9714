use thiserror::Error;

/// Errors produced by parsing, evaluation, simulation and optimization.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid interval [{lower}, {upper}]: {reason}")]
    Interval {
        lower: f64,
        upper: f64,
        reason: &'static str,
    },
    #[error("time {time} outside of the available domain [{start}, {end}]")]
    OutOfDomain { time: f64, start: f64, end: f64 },
    #[error("component `{component}` value {value} at t={time} outside bounds [{lower}, {upper}]")]
    OutOfBounds {
        component: String,
        time: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("operator {0} has no quantitative semantics")]
    UnsupportedOperator(&'static str),
    #[error("trace is not normalized to [-1, 1]: {0}")]
    NotNormalized(String),
    #[error("unknown signal component `{0}`")]
    UnknownVariable(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("branch violation: integrand {value} fell below 1 at t={time}")]
    BranchViolation { time: f64, value: f64 },
    #[error("non-finite state at t={0}")]
    NonFinite(f64),
    #[error("integration step {step} does not divide sample period {period}")]
    Misaligned { step: f64, period: f64 },
    #[error("invalid control sequence: {0}")]
    InvalidControl(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::InvalidTrace(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
