use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Caller-supplied data is malformed (shape mismatch, non-finite values, ...).
    #[error("input error: {0}")]
    Input(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// Linear solves, Newton iterations and other numerical kernels that did not succeed.
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("expression error at position {pos}: {msg}")]
    Expr { pos: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::Training(_) => 3,
            _ => 2,
        }
    }
}
