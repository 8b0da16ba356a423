use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("selfcheck failed: {0}")]
    Violation(String),
    #[error(transparent)]
    Core(#[from] bogobind::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Violation(_) => 4,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<bogobind::FockError> for CliError {
    fn from(e: bogobind::FockError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<bogobind::BogoliubovError> for CliError {
    fn from(e: bogobind::BogoliubovError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<bogobind::ModelError> for CliError {
    fn from(e: bogobind::ModelError) -> Self {
        CliError::Core(e.into())
    }
}
