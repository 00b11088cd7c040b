use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ITU channel {index} outside grid {min}..={max}")]
    ChannelOutOfGrid { index: i64, min: u32, max: u32 },
    #[error("logical channel {lc} outside grid (|lc| <= {max})")]
    LcOutOfGrid { lc: i32, max: i32 },
    #[error("logical channel 0 is the degenerate centre and has no conjugate partner")]
    DegenerateCenter,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("duplicate user id `{0}`")]
    DuplicateUser(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("link {0}-{1} is not served by any conjugate pair")]
    UnservedLink(String, String),
    #[error("QBER undefined: zero total coincidence rate")]
    UndefinedQber,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("score {0} is unreachable by the score function")]
    UnreachableScore(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no viable operating point: every sweep point failed")]
    NoViablePoint,
    #[error("infeasible plan: {} pair(s) cannot be covered", .0.len())]
    Infeasible(Vec<crate::topology::Link>),
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
        Error::Parse(e.to_string())
    }
}
