//! Configuration-driven experiment runner for the `conelab` library.

pub mod config;
pub mod run;
pub mod svg;
pub mod verify;

use conelab::error::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("{failed} acceptance criteria failed")]
    Acceptance { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(LabError::NonConvergence { .. }) => 2,
            CliError::Acceptance { .. } => 3,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 1);
        assert_eq!(CliError::Lab(LabError::NonConvergence { iterations: 3, residual: 1.0 }).exit_code(), 2);
        assert_eq!(CliError::Lab(LabError::Invalid("y".into())).exit_code(), 1);
        assert_eq!(CliError::Acceptance { failed: 2 }.exit_code(), 3);
    }
}
