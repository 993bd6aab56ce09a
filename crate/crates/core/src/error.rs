use thiserror::Error;

/// Errors raised by the library. Verification failures are not errors; they
/// are carried in the corresponding report types.
#[derive(Debug, Error)]
pub enum Error {
    #[error("field mismatch: GF({left}) operand used with GF({right})")]
    FieldMismatch { left: usize, right: usize },

    #[error("invalid field specification: {0}")]
    InvalidField(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("basis is not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("gate index out of range: qutrit {index} in a {n_qutrits}-qutrit register")]
    QutritIndex { index: usize, n_qutrits: usize },

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
