//! Experiment driver for the `relfk` engine: configuration files, subcommand
//! pipelines and result files.

pub mod commands;
pub mod config;
pub mod output;

use serde_json::json;
use thiserror::Error;

pub use commands::{run, Command};
pub use config::ExperimentConfig;
pub use output::Sink;

/// Version string stamped into every record.
pub const VERSION: &str = env!("RELFK_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    /// Message plus the missing config keys, if any.
    #[error("configuration error: {0}")]
    Config(String, Vec<String>),
    #[error(transparent)]
    Core(#[from] relfk::Error),
    #[error("strict check failed: {0}")]
    Strict(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use relfk::Error as E;
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Config(..) => 3,
            CliError::Core(E::Domain(_) | E::Config(_)) => 3,
            CliError::Core(E::ModelValidity(_) | E::Integrability(_)) => 4,
            CliError::Core(E::Numerical(_) | E::Resolution(_) | E::Extraction(_)) => 5,
            CliError::Strict(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        use relfk::Error as E;
        match self {
            CliError::Io(_) => "io",
            CliError::Usage(_) => "usage",
            CliError::Config(..) | CliError::Core(E::Domain(_) | E::Config(_)) => "config",
            CliError::Core(E::ModelValidity(_) | E::Integrability(_)) => "model",
            CliError::Core(E::Numerical(_) | E::Resolution(_) | E::Extraction(_)) => "numerical",
            CliError::Strict(_) => "strict",
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn diagnostic(&self) -> String {
        let missing = match self {
            CliError::Config(_, m) => m.clone(),
            _ => Vec::new(),
        };
        json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string(), "missing": missing })
            .to_string()
    }
}
