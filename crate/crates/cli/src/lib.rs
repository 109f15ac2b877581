//! Experiment runner: TOML configs in, CSV tables and JSON reports out.

pub mod config;
pub mod emit;
pub mod run;

use thiserror::Error;

pub use config::{load_config, ExperimentConfig, Kind};
pub use emit::{emit, Manifest};
pub use run::{run, Bundle, Check};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{kind}: {source}")]
    Run {
        kind: Kind,
        #[source]
        source: catqutrit::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Exit code when every check passed.
pub const EXIT_OK: i32 = 0;
/// Exit code when the run completed but some check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
