use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient observations: need n > {required}, got n = {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("rank-deficient design; offending columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures (rank deficiency, singular inner matrices) as
    /// opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::RankDeficient { .. } | Error::Singular(_))
    }
}
