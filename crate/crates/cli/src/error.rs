use thiserror::Error;
use tissuebench_core::{HarnessError, PlantError, VisionError};
use tissuebench_teleop::TeleopError;

/// Exit status 1 for bad input, 2 for failures while running.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Vision(v) => v.into(),
            e if e.is_validation() => CliError::Validation(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<VisionError> for CliError {
    fn from(e: VisionError) -> Self {
        match e {
            VisionError::Config(_) | VisionError::OutOfRange(_) => CliError::Validation(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PlantError> for CliError {
    fn from(e: PlantError) -> Self {
        match e {
            PlantError::Calibration(_) => CliError::Runtime(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TeleopError> for CliError {
    fn from(e: TeleopError) -> Self {
        match e {
            TeleopError::Harness(h) => h.into(),
            e if e.is_validation() => CliError::Validation(e.to_string()),
            e => CliError::Runtime(e.to_string()),
        }
    }
}
