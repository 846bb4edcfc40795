use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file contents or problem parameters.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] bsde_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Solver(bsde_core::Error::UnknownProblem(_)) => 2,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
