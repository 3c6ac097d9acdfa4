use thiserror::Error;

/// Command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn core_error(e: cadpu_core::Error) -> CliError {
    match e {
        cadpu_core::Error::NonFinite(_) => CliError::Numerical(e.to_string()),
        cadpu_core::Error::InvalidParameter(_) | cadpu_core::Error::Indivisible { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

impl From<cadpu_core::Error> for CliError {
    fn from(e: cadpu_core::Error) -> Self {
        core_error(e)
    }
}

impl From<cadpu_data::Error> for CliError {
    fn from(e: cadpu_data::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<cadpu_model::Error> for CliError {
    fn from(e: cadpu_model::Error) -> Self {
        use cadpu_model::Error as M;
        match e {
            M::UnknownKey(_) | M::InvalidValue { .. } | M::Syntax { .. } => CliError::Usage(e.to_string()),
            M::NonFiniteLoss { .. } => CliError::Numerical(e.to_string()),
            M::Autodiff(a @ cadpu_autodiff::Error::NonFinite { .. }) => CliError::Numerical(a.to_string()),
            M::Core(c) => core_error(c),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
