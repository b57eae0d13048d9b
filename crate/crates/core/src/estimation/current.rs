use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ForceEstimate, ForceSource};
use crate::plant::DriveTrain;
use crate::EstimationError;

/// Smallest variance reported for a current-based estimate, N². Keeps the
/// estimate usable by the fusion filter when the noise model is switched off.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Additive Gaussian noise on the controller's current readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentNoise {
    /// A.
    pub sigma_a: f64,
}

impl Default for CurrentNoise {
    /// About 0.05 N at the tool tip with the stock drivetrain.
    fn default() -> Self {
        Self { sigma_a: 0.0068 }
    }
}

impl CurrentNoise {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !(self.sigma_a.is_finite() && self.sigma_a >= 0.0) {
            return Err(EstimationError::Config(format!(
                "current noise sigma must be >= 0, got {}",
                self.sigma_a
            )));
        }
        Ok(())
    }

    /// A noisy readout of `current_a`.
    pub fn sample(&self, current_a: f64, rng: &mut impl Rng) -> f64 {
        if self.sigma_a == 0.0 {
            return current_a;
        }
        let n = Normal::new(0.0, self.sigma_a).expect("validated sigma");
        current_a + n.sample(rng)
    }
}

/// Tool-tip force implied by a motor current: `k_t · I · G / d`.
pub fn force_from_current(
    current_a: f64,
    time: f64,
    drivetrain: &DriveTrain,
    d_now: f64,
    noise: &CurrentNoise,
) -> Result<ForceEstimate, EstimationError> {
    if !(d_now.is_finite() && d_now > 0.0) {
        return Err(EstimationError::Kinematics(d_now));
    }
    let gain = drivetrain.torque_constant * drivetrain.gear_ratio / d_now;
    let sd = noise.sigma_a * gain;
    Ok(ForceEstimate {
        value: gain * current_a,
        variance: (sd * sd).max(VARIANCE_FLOOR),
        source: ForceSource::Current,
        time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_current_zero_force() {
        let f = force_from_current(0.0, 0.0, &DriveTrain::default(), 0.03, &CurrentNoise::default())
            .unwrap();
        assert_eq!(f.value, 0.0);
        assert!(f.variance > 0.0);
    }

    #[test]
    fn direct_formula() {
        let dt = DriveTrain {
            torque_constant: 0.05,
            gear_ratio: 10.0,
            ..DriveTrain::default()
        };
        let f = force_from_current(1.0, 0.0, &dt, 0.01, &CurrentNoise::default()).unwrap();
        assert!((f.value - 50.0).abs() < 1e-12);
    }

    #[test]
    fn variance_follows_the_linear_map() {
        let dt = DriveTrain::default();
        let noise = CurrentNoise { sigma_a: 0.01 };
        let f = force_from_current(0.5, 0.0, &dt, 0.0318, &noise).unwrap();
        let gain = dt.torque_constant * dt.gear_ratio / 0.0318;
        assert!((f.variance - (0.01 * gain).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn non_positive_radius_rejected() {
        let r = force_from_current(1.0, 0.0, &DriveTrain::default(), 0.0, &CurrentNoise::default());
        assert_eq!(r, Err(EstimationError::Kinematics(0.0)));
    }

    proptest::proptest! {
        #[test]
        fn linear_in_current_inverse_in_radius(i in -2.0f64..2.0, a in -3.0f64..3.0, d in 0.005f64..0.1) {
            let dt = DriveTrain::default();
            let n = CurrentNoise::default();
            let f = |i: f64, d: f64| force_from_current(i, 0.0, &dt, d, &n).unwrap().value;
            proptest::prop_assert!((f(a * i, d) - a * f(i, d)).abs() <= 1e-12 * (1.0 + f(i, d).abs()));
            proptest::prop_assert!((f(i, 2.0 * d) - 0.5 * f(i, d)).abs() <= 1e-12 * (1.0 + f(i, d).abs()));
        }
    }
}
