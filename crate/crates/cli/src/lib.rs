//! Experiment configuration and execution behind the `oaml` binary.

pub mod config;
pub mod runner;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 1 for failures
    /// during a run.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}
