use serde::{Deserialize, Serialize};

use super::{ForceEstimate, ForceSource};
use crate::EstimationError;

/// Tuning of the scalar fusion filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Random-walk process noise per step, N².
    pub process_noise: f64,
    /// Prior variance, N². `None` starts diffuse: the first update adopts
    /// the measurement.
    pub initial_variance: Option<f64>,
    /// Overrides the current-estimate variance, N².
    pub current_variance: Option<f64>,
    /// Overrides the sensor variance, N². Defaults to the raw sample variance
    /// of the sensor noise model.
    pub sensor_variance: Option<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            process_noise: 0.05 * 0.05,
            initial_variance: None,
            current_variance: None,
            sensor_variance: None,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !(self.process_noise.is_finite() && self.process_noise >= 0.0) {
            return Err(EstimationError::Config(format!(
                "process noise must be >= 0, got {}",
                self.process_noise
            )));
        }
        for v in [self.initial_variance, self.current_variance, self.sensor_variance]
            .into_iter()
            .flatten()
        {
            if !(v > 0.0) {
                return Err(EstimationError::Variance(v));
            }
        }
        Ok(())
    }
}

/// Random-walk force state with posterior variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionState {
    /// N.
    pub x: f64,
    /// N². Infinite while diffuse.
    pub p: f64,
    /// N² per step.
    pub q: f64,
}

impl FusionState {
    pub fn new(cfg: &FusionConfig) -> Self {
        Self {
            x: 0.0,
            p: cfg.initial_variance.unwrap_or(f64::INFINITY),
            q: cfg.process_noise,
        }
    }

    pub fn diffuse(q: f64) -> Self {
        Self {
            x: 0.0,
            p: f64::INFINITY,
            q,
        }
    }

    pub fn predict(&mut self) {
        self.p += self.q;
    }

    /// Scalar measurement update in information form:
    /// `P⁺ = 1/(1/P + 1/R)`, `x⁺ = x + (P⁺/R)(z − x)`.
    pub fn update(&mut self, z: f64, r: f64) -> Result<(), EstimationError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(EstimationError::Variance(r));
        }
        let p_post = 1.0 / (1.0 / self.p + 1.0 / r);
        self.x += p_post / r * (z - self.x);
        self.p = p_post;
        Ok(())
    }

    pub fn estimate(&self, time: f64) -> ForceEstimate {
        ForceEstimate {
            value: self.x,
            variance: self.p,
            source: ForceSource::Fused,
            time,
        }
    }
}

/// Predicts one step, then applies whichever measurements are present.
pub fn kalman_fuse_step(
    state: &FusionState,
    z1: Option<&ForceEstimate>,
    z2: Option<&ForceEstimate>,
) -> Result<FusionState, EstimationError> {
    for z in [z1, z2].into_iter().flatten() {
        if !(z.variance > 0.0) {
            return Err(EstimationError::Variance(z.variance));
        }
    }
    let mut next = *state;
    next.predict();
    for z in [z1, z2].into_iter().flatten() {
        next.update(z.value, z.variance)?;
    }
    Ok(next)
}
