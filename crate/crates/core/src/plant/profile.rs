use serde::{Deserialize, Serialize};

use super::DriveTrain;
use crate::PlantError;

/// Motor-side speed limits of a point-to-point move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    pub max_speed_rpm: f64,
    pub accel_rpm_s: f64,
    pub decel_rpm_s: f64,
}

impl Default for MotionProfile {
    fn default() -> Self {
        Self {
            max_speed_rpm: 200.0,
            accel_rpm_s: 20_000.0,
            decel_rpm_s: 20_000.0,
        }
    }
}

impl MotionProfile {
    pub fn validate(&self) -> Result<(), PlantError> {
        for (name, v) in [
            ("max_speed_rpm", self.max_speed_rpm),
            ("accel_rpm_s", self.accel_rpm_s),
            ("decel_rpm_s", self.decel_rpm_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PlantError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One time-indexed sample of a planned move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub t: f64,
    pub position_mm: f64,
    pub velocity_mm_s: f64,
}

/// Trapezoidal (or triangular) velocity profile between two tool positions.
///
/// Time is relative to the start of the move.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    start: f64,
    target: f64,
    direction: f64,
    distance: f64,
    accel: f64,
    decel: f64,
    peak_velocity: f64,
    t_accel: f64,
    t_cruise: f64,
    t_decel: f64,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    /// Peak speed reached, mm/s (unsigned).
    pub fn peak_velocity(&self) -> f64 {
        self.peak_velocity
    }

    pub fn accel_duration(&self) -> f64 {
        self.t_accel
    }

    pub fn cruise_duration(&self) -> f64 {
        self.t_cruise
    }

    pub fn decel_duration(&self) -> f64 {
        self.t_decel
    }

    pub fn duration(&self) -> f64 {
        self.t_accel + self.t_cruise + self.t_decel
    }

    pub fn is_empty(&self) -> bool {
        self.distance == 0.0
    }

    /// Position and velocity at `t` seconds into the move.
    pub fn sample(&self, t: f64) -> (f64, f64) {
        if t <= 0.0 || self.is_empty() {
            return (self.start, 0.0);
        }
        let total = self.duration();
        if t >= total {
            return (self.target, 0.0);
        }
        let (travelled, speed) = if t < self.t_accel {
            (0.5 * self.accel * t * t, self.accel * t)
        } else if t < self.t_accel + self.t_cruise {
            let dt = t - self.t_accel;
            (
                0.5 * self.accel * self.t_accel * self.t_accel + self.peak_velocity * dt,
                self.peak_velocity,
            )
        } else {
            let remaining = total - t;
            (
                self.distance - 0.5 * self.decel * remaining * remaining,
                self.decel * remaining,
            )
        };
        (
            self.start + self.direction * travelled,
            self.direction * speed,
        )
    }

    /// Setpoints every `dt` seconds, ending exactly on the target.
    pub fn setpoints(&self, dt: f64) -> Vec<Setpoint> {
        if self.is_empty() {
            return Vec::new();
        }
        let total = self.duration();
        let n = (total / dt).ceil() as usize;
        (0..=n)
            .map(|i| {
                let t = (i as f64 * dt).min(total);
                let (p, v) = self.sample(t);
                Setpoint {
                    t,
                    position_mm: p,
                    velocity_mm_s: v,
                }
            })
            .collect()
    }
}

/// Plans a point-to-point move honouring the profile's speed and ramp limits.
///
/// Motor-side rpm limits are mapped to the tool tip through the drivetrain's
/// nominal pinion radius. Moves too short to reach full speed become
/// triangular.
pub fn plan_trapezoid(
    start_mm: f64,
    target_mm: f64,
    profile: &MotionProfile,
    drivetrain: &DriveTrain,
) -> Result<Trajectory, PlantError> {
    profile.validate()?;
    for p in [start_mm, target_mm] {
        if !(0.0..=drivetrain.stroke_mm).contains(&p) {
            return Err(PlantError::OutOfRange {
                position_mm: p,
                stroke_mm: drivetrain.stroke_mm,
            });
        }
    }
    let v_max = drivetrain.rpm_to_mm_s(profile.max_speed_rpm);
    let accel = drivetrain.rpm_to_mm_s(profile.accel_rpm_s);
    let decel = drivetrain.rpm_to_mm_s(profile.decel_rpm_s);
    let distance = (target_mm - start_mm).abs();
    let direction = if target_mm >= start_mm { 1.0 } else { -1.0 };

    let ramp_distance = v_max * v_max / (2.0 * accel) + v_max * v_max / (2.0 * decel);
    let (peak, t_cruise) = if distance >= ramp_distance {
        (v_max, (distance - ramp_distance) / v_max)
    } else {
        ((2.0 * distance * accel * decel / (accel + decel)).sqrt(), 0.0)
    };
    Ok(Trajectory {
        start: start_mm,
        target: target_mm,
        direction,
        distance,
        accel,
        decel,
        peak_velocity: peak,
        t_accel: peak / accel,
        t_cruise,
        t_decel: peak / decel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(a: f64, b: f64) -> Trajectory {
        plan_trapezoid(a, b, &MotionProfile::default(), &DriveTrain::default()).unwrap()
    }

    #[test]
    fn zero_length_move_is_empty() {
        let t = plan(10.0, 10.0);
        assert!(t.is_empty());
        assert_eq!(t.duration(), 0.0);
        assert!(t.setpoints(1e-3).is_empty());
    }

    /// Integrates the piecewise-constant acceleration with a fine explicit
    /// step, independent of the closed-form sampling.
    fn brute_force(distance: f64, v_max: f64, accel: f64, decel: f64) -> (f64, f64, f64) {
        let h = 1e-7;
        let (mut x, mut v, mut t, mut peak) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        loop {
            let stop_dist = v * v / (2.0 * decel);
            let a = if x + stop_dist >= distance {
                -decel
            } else if v < v_max {
                accel
            } else {
                0.0
            };
            v = (v + a * h).min(v_max);
            if v <= 0.0 && t > 0.0 {
                break;
            }
            x += v * h;
            t += h;
            peak = peak.max(v);
        }
        (peak, x, t)
    }

    #[test]
    fn long_move_cruises_at_max_speed() {
        let dt = DriveTrain::default();
        let traj = plan(0.0, 35.0);
        let v_max = dt.rpm_to_mm_s(200.0);
        let a = dt.rpm_to_mm_s(20_000.0);
        assert!((traj.peak_velocity() - v_max).abs() < 1e-12);
        assert!(traj.cruise_duration() > 0.0);
        let (peak, x, t) = brute_force(35.0, v_max, a, a);
        assert!((peak - traj.peak_velocity()).abs() < 1e-3 * v_max);
        assert!((x - 35.0).abs() < 1e-3, "{x}");
        assert!((t - traj.duration()).abs() < 1e-4, "{t} vs {}", traj.duration());
    }

    #[test]
    fn short_move_is_triangular() {
        let dt = DriveTrain::default();
        let traj = plan(10.0, 10.2);
        assert!(traj.peak_velocity() < dt.rpm_to_mm_s(200.0));
        assert_eq!(traj.cruise_duration(), 0.0);
        assert!((traj.accel_duration() - traj.decel_duration()).abs() < 1e-15);
        let a = dt.rpm_to_mm_s(20_000.0);
        let (peak, x, _) = brute_force(0.2, f64::INFINITY, a, a);
        assert!((peak - traj.peak_velocity()).abs() < 1e-3 * traj.peak_velocity());
        assert!((x - 0.2).abs() < 1e-5);
    }

    #[test]
    fn final_setpoint_is_target() {
        for (a, b) in [(0.0, 35.0), (35.0, 0.0), (3.3, 17.77), (20.0, 20.0001)] {
            let sp = plan(a, b).setpoints(1e-3);
            let last = sp.last().unwrap();
            assert_eq!(last.position_mm, b);
            assert_eq!(last.velocity_mm_s, 0.0);
        }
    }

    #[test]
    fn out_of_stroke_rejected() {
        let r = plan_trapezoid(0.0, 36.0, &MotionProfile::default(), &DriveTrain::default());
        assert!(r.is_err());
    }

    proptest::proptest! {
        #[test]
        fn finite_differences_respect_limits(a in 0.0f64..35.0, b in 0.0f64..35.0) {
            let dt = DriveTrain::default();
            let traj = plan(a, b);
            let v_max = dt.rpm_to_mm_s(200.0);
            let acc = dt.rpm_to_mm_s(20_000.0);
            let h = 1e-4;
            let sp = traj.setpoints(h);
            for w in sp.windows(2) {
                let step = w[1].t - w[0].t;
                if step <= 0.0 { continue; }
                let v = (w[1].position_mm - w[0].position_mm) / step;
                proptest::prop_assert!(v.abs() <= v_max * (1.0 + 1e-9) + 1e-9);
            }
            for w in sp.windows(3) {
                let step = w[1].t - w[0].t;
                if (w[2].t - w[1].t - step).abs() > 1e-12 { continue; }
                let a2 = (w[2].position_mm - 2.0 * w[1].position_mm + w[0].position_mm) / (step * step);
                proptest::prop_assert!(a2.abs() <= acc * (1.0 + 1e-6) + 1e-6, "{}", a2);
            }
        }
    }
}
