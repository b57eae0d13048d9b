use super::DriveTrain;

/// Tool-tip state of the probing axis after a step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorState {
    pub position_mm: f64,
    pub velocity_mm_s: f64,
    /// Motor current, A. Signed: negative while braking.
    pub current_a: f64,
    pub commanded_target_mm: f64,
    pub time_s: f64,
}

impl MotorState {
    pub fn at_rest(position_mm: f64) -> Self {
        Self {
            position_mm,
            commanded_target_mm: position_mm,
            ..Self::default()
        }
    }
}

/// External force opposing the tool, N, as a function of position (mm) and
/// velocity (mm/s).
pub trait Load {
    fn force(&self, position_mm: f64, velocity_mm_s: f64) -> f64;
}

impl<F> Load for F
where
    F: Fn(f64, f64) -> f64,
{
    fn force(&self, position_mm: f64, velocity_mm_s: f64) -> f64 {
        self(position_mm, velocity_mm_s)
    }
}

/// A load that does not depend on the tool state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLoad(pub f64);

impl Load for ConstantLoad {
    fn force(&self, _: f64, _: f64) -> f64 {
        self.0
    }
}

/// Advances the axis by `dt` under a stiff position loop.
///
/// The loop reaches `setpoint` in one step whenever the force that requires
/// fits under the drivetrain's force ceiling. Otherwise the motor pushes at the
/// ceiling and the tool velocity is found from the implicit force balance, so a
/// stiff or viscous load slows the tool instead of stalling the integration.
///
/// Current is the motor torque (load + inertia + viscous friction) over k_t.
pub fn step(
    state: &MotorState,
    setpoint_mm: f64,
    dt: f64,
    load: &impl Load,
    drivetrain: &DriveTrain,
) -> MotorState {
    assert!(dt > 0.0, "step requires dt > 0");
    let d = drivetrain.radius_at(state.time_s);
    let mass = drivetrain.reflected_mass(d);
    let friction = drivetrain.reflected_friction(d);
    let f_max = drivetrain.force_limit(d);
    let x = state.position_mm;
    let v = state.velocity_mm_s;

    // Velocities are mm/s; inertial and friction terms need m/s.
    let balance = |v_new: f64| {
        mass * (v_new - v) / dt / 1000.0
            + load.force(x + v_new * dt, v_new)
            + friction * v_new / 1000.0
    };

    let target = setpoint_mm.clamp(0.0, drivetrain.stroke_mm);
    let v_track = (target - x) / dt;
    let f_track = balance(v_track);

    let (mut x_new, mut v_new, force) = if f_track.abs() <= f_max {
        (target, v_track, f_track)
    } else {
        let f_motor = f_max.copysign(f_track);
        let v_sat = solve_saturated(|u| balance(u) - f_motor, v_track, v);
        (x + v_sat * dt, v_sat, f_motor)
    };
    if !(0.0..=drivetrain.stroke_mm).contains(&x_new) {
        x_new = x_new.clamp(0.0, drivetrain.stroke_mm);
        v_new = (x_new - x) / dt;
    }

    MotorState {
        position_mm: x_new,
        velocity_mm_s: v_new,
        current_a: drivetrain.current_for_force(force, d),
        commanded_target_mm: state.commanded_target_mm,
        time_s: state.time_s + dt,
    }
}

/// Root of a non-decreasing residual by bisection. `v_track` is known to lie
/// on the far side of the root; the bracket is grown from `v_prev`.
fn solve_saturated(residual: impl Fn(f64) -> f64, v_track: f64, v_prev: f64) -> f64 {
    let r_track = residual(v_track);
    let mut far = v_prev;
    let mut span = (v_track - v_prev).abs().max(1.0);
    // Walk away from v_track until the residual changes sign.
    let away = if r_track > 0.0 { -1.0 } else { 1.0 };
    for _ in 0..200 {
        if residual(far).signum() != r_track.signum() || residual(far) == 0.0 {
            break;
        }
        far += away * span;
        span *= 2.0;
    }
    let (mut lo, mut hi) = if away < 0.0 { (far, v_track) } else { (v_track, far) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{plan_trapezoid, MotionProfile};

    fn none() -> ConstantLoad {
        ConstantLoad(0.0)
    }

    #[test]
    fn at_rest_draws_no_current() {
        let dt = DriveTrain::default();
        let s = step(&MotorState::at_rest(10.0), 10.0, 1e-3, &none(), &dt);
        assert_eq!(s.current_a, 0.0);
        assert_eq!(s.position_mm, 10.0);
        assert_eq!(s.velocity_mm_s, 0.0);
    }

    #[test]
    fn steady_cruise_current_is_load_plus_friction() {
        let dt = DriveTrain::default();
        let d = dt.radius_at(0.0);
        let v = 50.0;
        let s0 = MotorState {
            position_mm: 10.0,
            velocity_mm_s: v,
            ..MotorState::default()
        };
        let f = 1.5;
        let s1 = step(&s0, 10.0 + v * 1e-3, 1e-3, &ConstantLoad(f), &dt);
        let expected = dt.current_for_force(f + dt.reflected_friction(d) * v / 1000.0, d);
        assert!((s1.current_a - expected).abs() < 1e-12);
        // Torque balance on the rotor side gives the same number.
        let omega = v / 1000.0 / d * dt.gear_ratio;
        let torque = f * d / dt.gear_ratio + dt.viscous_friction * omega;
        assert!((s1.current_a - torque / dt.torque_constant).abs() < 1e-12);
    }

    #[test]
    fn start_from_rest_spikes_above_cruise() {
        let dtr = DriveTrain::default();
        let traj = plan_trapezoid(0.0, 35.0, &MotionProfile::default(), &dtr).unwrap();
        let mut s = MotorState::at_rest(0.0);
        let mut currents = Vec::new();
        for sp in traj.setpoints(1e-3).iter().skip(1) {
            s = step(&s, sp.position_mm, 1e-3, &none(), &dtr);
            currents.push(s.current_a);
        }
        let mid = currents[currents.len() / 2];
        assert!(currents[0] > mid, "{} vs {}", currents[0], mid);
        assert!(mid > 0.0);
    }

    #[test]
    fn saturation_slows_the_tool() {
        let dtr = DriveTrain::default();
        let viscous = |_: f64, v: f64| 0.5 * v.max(0.0);
        let s0 = MotorState::at_rest(12.0);
        let s1 = step(&s0, 12.1, 1e-3, &viscous, &dtr);
        let f_max = dtr.force_limit(dtr.radius_at(0.0));
        assert!(s1.position_mm < 12.1);
        assert!(s1.position_mm > 12.0);
        let i_max = dtr.current_for_force(f_max, dtr.radius_at(0.0));
        assert!((s1.current_a - i_max).abs() < 1e-12);
        // Force balance holds at the solved velocity.
        let d = dtr.radius_at(0.0);
        let v = s1.velocity_mm_s;
        let residual = dtr.reflected_mass(d) * v / 1e-3 / 1000.0
            + viscous(s1.position_mm, v)
            + dtr.reflected_friction(d) * v / 1000.0
            - f_max;
        assert!(residual.abs() < 1e-9, "{residual}");
    }

    #[test]
    fn position_stays_in_stroke() {
        let dtr = DriveTrain::default();
        let s = step(&MotorState::at_rest(34.99), 40.0, 1e-3, &none(), &dtr);
        assert!(s.position_mm <= 35.0);
        let s = step(&MotorState::at_rest(0.01), -5.0, 1e-3, &none(), &dtr);
        assert!(s.position_mm >= 0.0);
    }

    proptest::proptest! {
        #[test]
        fn deterministic(x in 0.0f64..35.0, v in -60.0f64..60.0, sp in 0.0f64..35.0, f in 0.0f64..10.0) {
            let dtr = DriveTrain::default();
            let s0 = MotorState { position_mm: x, velocity_mm_s: v, ..MotorState::default() };
            let load = move |p: f64, u: f64| f + 0.1 * p + 0.05 * u.max(0.0);
            let a = step(&s0, sp, 1e-3, &load, &dtr);
            let b = step(&s0, sp, 1e-3, &load, &dtr);
            proptest::prop_assert_eq!(a.position_mm.to_bits(), b.position_mm.to_bits());
            proptest::prop_assert_eq!(a.current_a.to_bits(), b.current_a.to_bits());
            proptest::prop_assert!((0.0..=35.0).contains(&a.position_mm));
            proptest::prop_assert!(a.current_a.is_finite());
        }
    }
}
