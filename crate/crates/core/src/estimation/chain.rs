use serde::{Deserialize, Serialize};

use super::{
    force_from_current, kalman_fuse_step, CurrentNoise, ForceEstimate, ForceSource, FusionConfig,
    FusionState, LowPassFilter, SensorConfig,
};
use crate::plant::DriveTrain;
use crate::EstimationError;

const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub current_noise: CurrentNoise,
    pub sensor: SensorConfig,
    pub lowpass_cutoff_hz: f64,
    pub fusion: FusionConfig,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            current_noise: CurrentNoise::default(),
            sensor: SensorConfig::default(),
            lowpass_cutoff_hz: 0.1,
            fusion: FusionConfig::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), EstimationError> {
        self.current_noise.validate()?;
        self.sensor.validate()?;
        self.fusion.validate()?;
        if !(self.lowpass_cutoff_hz.is_finite() && self.lowpass_cutoff_hz > 0.0) {
            return Err(EstimationError::Config(format!(
                "low-pass cutoff must be positive, got {}",
                self.lowpass_cutoff_hz
            )));
        }
        Ok(())
    }

    /// Variance the fusion filter assigns to the smoothed sensor channel.
    pub fn sensor_variance(&self) -> f64 {
        self.fusion
            .sensor_variance
            .unwrap_or_else(|| self.sensor.axial_variance().max(VARIANCE_FLOOR))
    }
}

/// Measured inputs for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub time: f64,
    /// Motor current as read from the controller, A.
    pub current_a: f64,
    /// Pinion radius at this instant, m.
    pub d_m: f64,
    /// Raw axial sensor channel, N.
    pub sensor_fz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOutput {
    pub f_current: ForceEstimate,
    pub f_sensor_filtered: ForceEstimate,
    pub fused: ForceEstimate,
}

/// Current estimate and smoothed sensor, fused each step.
#[derive(Debug, Clone)]
pub struct ForceChain {
    cfg: ChainConfig,
    drivetrain: DriveTrain,
    lowpass: LowPassFilter,
    fusion: FusionState,
    last_time: Option<f64>,
}

impl ForceChain {
    pub fn new(
        cfg: ChainConfig,
        drivetrain: DriveTrain,
        sample_dt: f64,
    ) -> Result<Self, EstimationError> {
        cfg.validate()?;
        let lowpass = LowPassFilter::new(cfg.lowpass_cutoff_hz, sample_dt)?;
        let fusion = FusionState::new(&cfg.fusion);
        Ok(Self {
            cfg,
            drivetrain,
            lowpass,
            fusion,
            last_time: None,
        })
    }

    pub fn state(&self) -> &FusionState {
        &self.fusion
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn step(&mut self, m: &Measurement) -> Result<ChainOutput, EstimationError> {
        if let Some(prev) = self.last_time {
            if !(m.time > prev) {
                return Err(EstimationError::TimestampRegression {
                    previous: prev,
                    current: m.time,
                });
            }
        }
        let mut f_current =
            force_from_current(m.current_a, m.time, &self.drivetrain, m.d_m, &self.cfg.current_noise)?;
        if let Some(r1) = self.cfg.fusion.current_variance {
            f_current.variance = r1;
        }
        let f_sensor_filtered = ForceEstimate {
            value: self.lowpass.step(m.sensor_fz),
            variance: self.cfg.sensor_variance(),
            source: ForceSource::Sensor,
            time: m.time,
        };
        self.fusion = kalman_fuse_step(&self.fusion, Some(&f_current), Some(&f_sensor_filtered))?;
        self.last_time = Some(m.time);
        Ok(ChainOutput {
            f_current,
            f_sensor_filtered,
            fused: self.fusion.estimate(m.time),
        })
    }
}

/// One fused estimate per measurement.
pub fn run_chain(
    measurements: &[Measurement],
    cfg: &ChainConfig,
    drivetrain: &DriveTrain,
    sample_dt: f64,
) -> Result<Vec<ChainOutput>, EstimationError> {
    let mut chain = ForceChain::new(cfg.clone(), drivetrain.clone(), sample_dt)?;
    measurements.iter().map(|m| chain.step(m)).collect()
}
