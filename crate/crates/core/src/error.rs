use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no copy of the pattern: {0}")]
    NoCopy(String),

    #[error("size guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A guarantee that should hold in the guaranteed regime did not.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GuardExceeded(_) | Error::BudgetExhausted(_) => 3,
            Error::InvariantViolation(_) => 4,
            _ => 2,
        }
    }
}
