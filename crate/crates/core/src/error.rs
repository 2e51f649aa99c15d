use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("invalid group descriptor {0:?}")]
    InvalidGroup(String),
    #[error("words belong to different groups")]
    GroupMismatch,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("window too small: need at least {needed} radii, have {have}")]
    WindowTooSmall { needed: usize, have: usize },
    #[error("method {0} cannot be derived from ball counts")]
    UnsupportedMethod(&'static str),
    #[error("operation requires a free group")]
    NotFreeGroup,
    #[error("power iteration did not converge after {0} steps")]
    PowerIterationDiverged(usize),
    #[error("element {0} has finite order")]
    FiniteOrderElement(String),
    #[error("nothing found within bound: {0}")]
    NotFoundWithinBound(String),
    #[error("interior set Y_{0} of buffering sequence is empty")]
    EmptyInteriorSet(usize),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("invalid alternating word: {0}")]
    InvalidAlternatingWord(String),
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("counterexample found: {0}")]
    CounterexampleFound(String),
    #[error("coarse quotient violation: {0}")]
    CqViolation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
