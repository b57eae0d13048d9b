use std::net::SocketAddr;

use thiserror::Error;
use tissuebench_core::HarnessError;

#[derive(Debug, Error)]
pub enum TeleopError {
    #[error("invalid service configuration: {0}")]
    Config(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
    #[error("simulation thread panicked")]
    SimulationPanicked,
}

impl TeleopError {
    /// Problems found before the service binds or steps.
    pub fn is_validation(&self) -> bool {
        match self {
            TeleopError::Config(_) => true,
            TeleopError::Harness(e) => e.is_validation(),
            _ => false,
        }
    }
}
