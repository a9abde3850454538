use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how the CLI maps them to exit codes:
/// invalid inputs (2), numeric failures (3), out-of-regime requests (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry in input matrix")]
    NonFinite,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("out of regime: {0}")]
    OutOfRegime(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("sample-domain error at coordinate {index}: {detail}")]
    SampleDomain { index: usize, detail: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Tags an error with the Monte Carlo sample index it occurred at.
    pub fn at_sample(self, index: usize) -> Error {
        match self {
            e @ Error::SampleDomain { .. } => e,
            e => Error::SampleDomain {
                index,
                detail: e.to_string(),
            },
        }
    }

    /// Process exit code for the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape(_) | Error::Argument(_) | Error::Parse(_) => 2,
            Error::OutOfRegime(_) => 4,
            _ => 3,
        }
    }
}
