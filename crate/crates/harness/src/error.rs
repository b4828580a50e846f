use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Nn(#[from] nn_core::NnError),
    #[error(transparent)]
    Arch(#[from] arch_graph::ArchError),
    #[error(transparent)]
    Dmm(#[from] dmm_data::DmmError),
    #[error(transparent)]
    Sensitivity(#[from] order_sensitivity::SensitivityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
