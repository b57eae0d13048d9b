//! Force sensing: current-based estimate, simulated F/T sensor, low-pass
//! filter and scalar Kalman fusion of the two streams.

mod chain;
mod current;
mod kalman;
mod lowpass;
mod sensor;

pub use chain::{run_chain, ChainConfig, ChainOutput, ForceChain, Measurement};
pub use current::{force_from_current, CurrentNoise};
pub use kalman::{kalman_fuse_step, FusionConfig, FusionState};
pub use lowpass::LowPassFilter;
pub use sensor::{
    simulate_ft_sensor, simulate_wrench, FtSensor, SensorConfig, SixAxisReading, Wrench, AXIAL,
    MAX_CROSSTALK,
};

use serde::{Deserialize, Serialize};

/// Where a force reading came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceSource {
    Current,
    Sensor,
    Fused,
}

/// A scalar force reading with its variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceEstimate {
    /// N.
    pub value: f64,
    /// N².
    pub variance: f64,
    pub source: ForceSource,
    pub time: f64,
}
