use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("model did not converge: {0}")]
    NotConverged(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Engine(#[from] boxjenkins::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use boxjenkins::Error as E;
        match self {
            CliError::Input(_) | CliError::Read { .. } => 2,
            CliError::NotConverged(_) => 3,
            CliError::Write { .. } => 4,
            CliError::Engine(e) => match e {
                E::CannotInvert { .. } => 4,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
