use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::EstimationError;

/// Largest permitted off-diagonal crosstalk coefficient.
pub const MAX_CROSSTALK: f64 = 0.001;

/// Force and torque on the six sensor axes: fx, fy, fz (N), mx, my, mz (N·m).
pub type Wrench = [f64; 6];

/// Index of the probing (axial) axis.
pub const AXIAL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SixAxisReading {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub time: f64,
}

impl SixAxisReading {
    pub fn from_wrench(w: Wrench, time: f64) -> Self {
        Self {
            fx: w[0],
            fy: w[1],
            fz: w[2],
            mx: w[3],
            my: w[4],
            mz: w[5],
            time,
        }
    }

    pub fn wrench(&self) -> Wrench {
        [self.fx, self.fy, self.fz, self.mx, self.my, self.mz]
    }
}

/// Simulated six-axis F/T sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Gaussian noise on force channels, N.
    pub noise_sigma: f64,
    /// Gaussian noise on torque channels, N·m.
    pub torque_noise_sigma: f64,
    /// Reading = C · true wrench before noise and saturation.
    pub crosstalk: [[f64; 6]; 6],
    /// Per-axis force range, N.
    pub force_range: f64,
    /// Per-axis torque range, N·m.
    pub torque_range: f64,
    pub seed: u64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.25,
            torque_noise_sigma: 0.002,
            crosstalk: default_crosstalk(),
            force_range: 50.0,
            torque_range: 1.0,
            seed: 7,
        }
    }
}

/// A fixed coupling pattern spanning the full ±0.1% band.
fn default_crosstalk() -> [[f64; 6]; 6] {
    let mut c = [[0.0; 6]; 6];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j {
                1.0
            } else {
                MAX_CROSSTALK * (((i * 7 + j * 3) % 11) as f64 - 5.0) / 5.0
            };
        }
    }
    c
}

impl SensorConfig {
    /// Every off-diagonal coefficient at the +0.1% limit.
    pub fn worst_case_crosstalk() -> [[f64; 6]; 6] {
        let mut c = [[MAX_CROSSTALK; 6]; 6];
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        c
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self.torque_noise_sigma = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        for (i, row) in self.crosstalk.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let ok = if i == j {
                    *v == 1.0
                } else {
                    v.is_finite() && v.abs() <= MAX_CROSSTALK
                };
                if !ok {
                    return Err(EstimationError::Config(format!(
                        "crosstalk[{i}][{j}] = {v} violates the unit diagonal / 0.1% bound"
                    )));
                }
            }
        }
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("torque_noise_sigma", self.torque_noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EstimationError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("force_range", self.force_range), ("torque_range", self.torque_range)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EstimationError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Variance of one raw axial sample, N².
    pub fn axial_variance(&self) -> f64 {
        self.noise_sigma * self.noise_sigma
    }
}

/// One reading of the sensor for an axial force applied along the tool axis.
pub fn simulate_ft_sensor(
    true_axial_force: f64,
    time: f64,
    cfg: &SensorConfig,
    rng: &mut impl Rng,
) -> SixAxisReading {
    let mut wrench = [0.0; 6];
    wrench[AXIAL] = true_axial_force;
    simulate_wrench(&wrench, time, cfg, rng)
}

/// One reading for an arbitrary applied wrench.
pub fn simulate_wrench(
    wrench: &Wrench,
    time: f64,
    cfg: &SensorConfig,
    rng: &mut impl Rng,
) -> SixAxisReading {
    let mut out = [0.0; 6];
    for (i, o) in out.iter_mut().enumerate() {
        let coupled: f64 = cfg.crosstalk[i].iter().zip(wrench).map(|(c, w)| c * w).sum();
        let (sigma, range) = if i < 3 {
            (cfg.noise_sigma, cfg.force_range)
        } else {
            (cfg.torque_noise_sigma, cfg.torque_range)
        };
        let noise = if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
        } else {
            0.0
        };
        *o = (coupled + noise).clamp(-range, range);
    }
    SixAxisReading::from_wrench(out, time)
}

/// A sensor with its own seeded noise stream.
#[derive(Debug, Clone)]
pub struct FtSensor {
    cfg: SensorConfig,
    rng: ChaCha8Rng,
}

impl FtSensor {
    pub fn new(cfg: SensorConfig) -> Result<Self, EstimationError> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self { cfg, rng })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.cfg
    }

    pub fn read(&mut self, true_axial_force: f64, time: f64) -> SixAxisReading {
        simulate_ft_sensor(true_axial_force, time, &self.cfg, &mut self.rng)
    }

    pub fn read_wrench(&mut self, wrench: &Wrench, time: f64) -> SixAxisReading {
        simulate_wrench(wrench, time, &self.cfg, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worst() -> SensorConfig {
        SensorConfig {
            crosstalk: SensorConfig::worst_case_crosstalk(),
            ..SensorConfig::default()
        }
        .noiseless()
    }

    #[test]
    fn zero_force_zero_reading() {
        let mut s = FtSensor::new(SensorConfig::default().noiseless()).unwrap();
        assert_eq!(s.read(0.0, 0.0).wrench(), [0.0; 6]);
    }

    #[test]
    fn off_axis_within_crosstalk_band() {
        let mut s = FtSensor::new(worst()).unwrap();
        let r = s.read(10.0, 0.0);
        assert_eq!(r.fz, 10.0);
        for (i, v) in r.wrench().iter().enumerate() {
            if i != AXIAL {
                assert!(v.abs() <= 0.01 + 1e-15, "axis {i}: {v}");
            }
        }
    }

    #[test]
    fn saturates_at_range() {
        let mut s = FtSensor::new(worst()).unwrap();
        assert_eq!(s.read(60.0, 0.0).fz, 50.0);
        assert_eq!(s.read(-60.0, 0.0).fz, -50.0);
        let r = s.read_wrench(&[0.0, 0.0, 0.0, 3.0, 0.0, -2.0], 0.0);
        assert_eq!(r.mx, 1.0);
        assert_eq!(r.mz, -1.0);
    }

    #[test]
    fn seeded_streams_reproduce() {
        let mut a = FtSensor::new(SensorConfig::default()).unwrap();
        let mut b = FtSensor::new(SensorConfig::default()).unwrap();
        for k in 0..1000 {
            let t = k as f64 * 1e-3;
            assert_eq!(a.read(2.0, t), b.read(2.0, t));
        }
    }

    #[test]
    fn crosstalk_bound_enforced() {
        let mut cfg = SensorConfig::default();
        cfg.crosstalk[0][1] = 0.002;
        assert!(cfg.validate().is_err());
        let mut cfg = SensorConfig::default();
        cfg.crosstalk[3][3] = 0.9;
        assert!(cfg.validate().is_err());
        SensorConfig::default().validate().unwrap();
    }

    proptest::proptest! {
        #[test]
        fn off_axis_bounded_for_any_wrench(w in proptest::array::uniform6(-0.9f64..0.9), scale in 0.0f64..40.0) {
            let w: Wrench = [w[0] * scale, w[1] * scale, w[2] * scale, w[3], w[4], w[5]];
            let mut s = FtSensor::new(worst()).unwrap();
            let r = s.read_wrench(&w, 0.0).wrench();
            let l1: f64 = w.iter().map(|v| v.abs()).sum();
            for i in 0..6 {
                proptest::prop_assert!((r[i] - w[i]).abs() <= MAX_CROSSTALK * l1 + 1e-12);
            }
        }
    }
}
