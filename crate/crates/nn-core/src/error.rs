use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    /// Tensor shapes are incompatible with the requested operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// Layer or optimizer configured with invalid hyperparameters.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;
