//! Library side of the `surfacelink` command-line tool.

pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("scene violation: {0}")]
    Scene(String),
    #[error("oracle under-resolved: {0}")]
    Underresolved(String),
    #[error("oracle check failed: {0}")]
    OracleFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Scene(_) => 3,
            CliError::Underresolved(_) => 4,
            CliError::OracleFailed(_) | CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<surfacelink::Error> for CliError {
    fn from(e: surfacelink::Error) -> Self {
        use surfacelink::Error as E;
        let msg = e.to_string();
        match e.root() {
            E::QuadratureUnderresolved { .. } => CliError::Underresolved(msg),
            E::NonFinite { .. } => CliError::Other(msg),
            _ if e.is_scene_violation() => CliError::Scene(msg),
            _ => CliError::Config(msg),
        }
    }
}
