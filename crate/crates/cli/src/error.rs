use thiserror::Error;

/// Exit codes: 0 success, 1 configuration, 2 data, 3 network.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("network error: {0}")]
    Network(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Network(_) => 3,
        }
    }
}

/// Outcome of a subcommand that wrote its reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rows: usize,
    /// Record-level failures; reports still cover the valid records.
    pub failures: Vec<String>,
    pub network_failures: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.network_failures > 0 {
            3
        } else if !self.failures.is_empty() {
            2
        } else {
            0
        }
    }
}
