use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] dblrot::Error),
}

impl CliError {
    /// 0 success, 1 invalid configuration, 2 capacity, 3 statistical
    /// precondition.
    pub fn exit_code(&self) -> i32 {
        use dblrot::Error as E;
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Core(e) => match e {
                E::InvalidInput(_) | E::DimensionMismatch { .. } | E::UnrepresentableDepth(_) => 1,
                E::Capacity { .. } => 2,
                E::DegenerateFit(_) | E::NotIntegrable(_) | E::InvalidProbability(_) | E::Underpowered(_) => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
