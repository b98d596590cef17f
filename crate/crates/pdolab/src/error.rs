use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected a {expected} side function, got {got}")]
    SideMismatch { expected: &'static str, got: &'static str },
    #[error("grid mismatch")]
    GridMismatch,
    #[error("derivative order {0} exceeds the limit {1}")]
    OrderTooHigh(usize, usize),
    #[error("index {0} out of range (max {1})")]
    OutOfRange(usize, usize),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("wrong symbol form: expected {expected}, got {got}")]
    WrongForm { expected: &'static str, got: &'static str },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
