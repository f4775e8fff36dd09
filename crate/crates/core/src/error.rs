use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("unsupported generalization: {0}")]
    Unsupported(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("instability: {0}")]
    Instability(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }
}
