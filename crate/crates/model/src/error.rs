use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("config key {key:?}: invalid value {value:?} ({reason})")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("config line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Core(#[from] cadpu_core::Error),
    #[error(transparent)]
    Autodiff(#[from] cadpu_autodiff::Error),
    #[error(transparent)]
    Data(#[from] cadpu_data::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
