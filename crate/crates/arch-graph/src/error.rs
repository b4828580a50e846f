use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArchError {
    /// Structural problem localized to one node.
    #[error("architecture error at node {index} '{name}': {message}")]
    Node {
        index: usize,
        name: String,
        message: String,
    },
    #[error("invalid architecture: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ArchError>;
