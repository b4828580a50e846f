use thiserror::Error;

#[derive(Debug, Error)]
pub enum DmmError {
    /// Malformed IDX input, localized to a byte offset.
    #[error("idx parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("container error: {0}")]
    Container(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DmmError>;
