use thiserror::Error;

pub type Result<T, E = CurError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CurError {
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range 1..={bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("rank parameter {k} out of range (max {max})")]
    RankOutOfRange { k: usize, max: usize },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CurError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CurError::InvalidParameter(msg.into())
    }

    /// True for failures caused by the numerical content of the input
    /// (rank preconditions) rather than its shape or syntax.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CurError::RankDeficient(_) | CurError::RankOutOfRange { .. }
        )
    }
}
