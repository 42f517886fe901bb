use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: |H - H†| = {deviation:.3e} at ({row}, {col})")]
    NotHermitian {
        deviation: f64,
        row: usize,
        col: usize,
    },

    #[error("matrix is not unitary: ‖U†U - I‖_F = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown operator label '{0}' (expected one of I, X, Y, Z)")]
    UnknownLabel(char),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("adversarial sample set is empty")]
    EmptySampleSet,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("negative duration: dt = {0}")]
    NegativeDuration(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
