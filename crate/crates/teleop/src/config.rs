use std::net::{Ipv4Addr, SocketAddr};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tissuebench_core::harness::ExperimentConfig;

use crate::TeleopError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    /// Tissue, drive, estimation and vision settings of the session. The
    /// schedule is ignored; motion comes from commands.
    pub experiment: ExperimentConfig,
    /// Wall-clock seconds per simulated second. 1 is real time, 2 is half
    /// speed.
    pub time_scale: f64,
    /// Telemetry messages per simulated second.
    pub telemetry_hz: f64,
    /// Messages a subscriber may fall behind before it is dropped.
    pub backlog: usize,
    /// Longest a single websocket write may block, s.
    pub stall_timeout_s: f64,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            addr: SocketAddr::from((Ipv4Addr::LOCALHOST, 8080)),
            experiment: ExperimentConfig::default(),
            time_scale: 1.0,
            telemetry_hz: 50.0,
            backlog: 256,
            stall_timeout_s: 2.0,
        }
    }
}

impl ServeConfig {
    pub fn from_json(text: &str) -> Result<Self, TeleopError> {
        serde_json::from_str(text).map_err(|e| TeleopError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), TeleopError> {
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(TeleopError::Config(format!("time_scale must be positive, got {}", self.time_scale)));
        }
        let max_hz = 1.0 / self.experiment.dt;
        if !(self.telemetry_hz > 0.0 && self.telemetry_hz <= max_hz) {
            return Err(TeleopError::Config(format!(
                "telemetry_hz must lie in (0, {max_hz}], got {}",
                self.telemetry_hz
            )));
        }
        if self.backlog == 0 {
            return Err(TeleopError::Config("backlog must be at least 1".into()));
        }
        if !(self.stall_timeout_s.is_finite() && self.stall_timeout_s > 0.0) {
            return Err(TeleopError::Config(format!(
                "stall_timeout_s must be positive, got {}",
                self.stall_timeout_s
            )));
        }
        self.experiment.validate()?;
        Ok(())
    }

    /// Simulation steps between telemetry messages.
    pub fn decimation(&self) -> u64 {
        ((1.0 / (self.telemetry_hz * self.experiment.dt)).round() as u64).max(1)
    }

    pub(crate) fn stall_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.stall_timeout_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ServeConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.decimation(), 20);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for cfg in [
            ServeConfig {
                time_scale: 0.0,
                ..ServeConfig::default()
            },
            ServeConfig {
                telemetry_hz: 5000.0,
                ..ServeConfig::default()
            },
            ServeConfig {
                backlog: 0,
                ..ServeConfig::default()
            },
        ] {
            let e = cfg.validate().unwrap_err();
            assert!(e.is_validation(), "{e}");
        }
        let mut cfg = ServeConfig::default();
        cfg.experiment = ExperimentConfig::for_preset("nope");
        assert!(cfg.validate().unwrap_err().is_validation());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = ServeConfig::from_json(r#"{"addr": "0.0.0.0:9000", "time_scale": 2}"#).unwrap();
        assert_eq!(cfg.addr.port(), 9000);
        assert_eq!(cfg.time_scale, 2.0);
        assert_eq!(cfg.backlog, 256);
    }
}
