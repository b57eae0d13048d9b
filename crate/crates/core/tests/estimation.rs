use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tissuebench_core::estimation::{
    force_from_current, kalman_fuse_step, run_chain, simulate_ft_sensor, ChainConfig, CurrentNoise, ForceEstimate,
    ForceSource, FusionState, LowPassFilter, Measurement, SensorConfig,
};
use tissuebench_core::plant::DriveTrain;
use tissuebench_core::EstimationError;

fn est(value: f64, variance: f64) -> ForceEstimate {
    ForceEstimate {
        value,
        variance,
        source: ForceSource::Sensor,
        time: 0.0,
    }
}

#[test]
fn current_estimate_inverts_the_drivetrain() {
    let dt = DriveTrain::default();
    let d = dt.radius_at(0.0);
    let i = dt.current_for_force(3.0, d);
    let f = force_from_current(i, 0.0, &dt, d, &CurrentNoise::default()).unwrap();
    assert!((f.value - 3.0).abs() < 1e-12);
    assert_eq!(f.source, ForceSource::Current);
    assert!(matches!(
        force_from_current(i, 0.0, &dt, 0.0, &CurrentNoise::default()),
        Err(EstimationError::Kinematics(_))
    ));
}

#[test]
fn chain_tracks_a_constant_force() {
    let dt = DriveTrain::default();
    let cfg = ChainConfig::default();
    let d = dt.radius_at(0.0);
    let i = dt.current_for_force(2.0, d);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ms: Vec<Measurement> = (0..20_000)
        .map(|k| {
            let t = k as f64 * 1e-3;
            Measurement {
                time: t,
                current_a: i,
                d_m: d,
                sensor_fz: simulate_ft_sensor(2.0, t, &cfg.sensor, &mut rng).fz,
            }
        })
        .collect();
    let out = run_chain(&ms, &cfg, &dt, 1e-3).unwrap();
    let last = out.last().unwrap();
    assert!((last.f_current.value - 2.0).abs() < 1e-9);
    assert!((last.f_sensor_filtered.value - 2.0).abs() < 0.05, "{last:?}");
    assert!((last.fused.value - 2.0).abs() < 0.05, "{last:?}");
}

#[test]
fn chain_rejects_time_going_backwards() {
    let dt = DriveTrain::default();
    let d = dt.radius_at(0.0);
    let m = |t| Measurement {
        time: t,
        current_a: 0.0,
        d_m: d,
        sensor_fz: 0.0,
    };
    let err = run_chain(&[m(1.0), m(0.5)], &ChainConfig::default(), &dt, 1e-3).unwrap_err();
    assert!(matches!(err, EstimationError::TimestampRegression { .. }));
}

#[test]
fn noiseless_sensor_is_exact_on_axis() {
    let cfg = SensorConfig::default().noiseless();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = simulate_ft_sensor(4.0, 0.0, &cfg, &mut rng);
    assert!((r.fz - 4.0).abs() < 1e-12);
}

#[test]
fn fuse_rejects_nonpositive_variance() {
    let s = FusionState::diffuse(1e-4);
    assert!(matches!(
        kalman_fuse_step(&s, Some(&est(1.0, 0.0)), None),
        Err(EstimationError::Variance(_))
    ));
}

proptest! {
    #[test]
    fn fused_variance_below_both_inputs(
        x0 in -10.0f64..10.0, p0 in 1e-4f64..10.0,
        z1 in -10.0f64..10.0, r1 in 1e-4f64..10.0,
        z2 in -10.0f64..10.0, r2 in 1e-4f64..10.0,
    ) {
        let s = FusionState { x: x0, p: p0, q: 0.0 };
        let next = kalman_fuse_step(&s, Some(&est(z1, r1)), Some(&est(z2, r2))).unwrap();
        prop_assert!(next.p < r1.min(r2));
        let info = 1.0 / p0 + 1.0 / r1 + 1.0 / r2;
        prop_assert!((1.0 / next.p - info).abs() <= 1e-9 * info);
        let lo = x0.min(z1).min(z2);
        let hi = x0.max(z1).max(z2);
        prop_assert!(next.x >= lo - 1e-9 && next.x <= hi + 1e-9);
    }

    #[test]
    fn lowpass_output_stays_in_input_hull(xs in proptest::collection::vec(-50.0f64..50.0, 1..500)) {
        let mut f = LowPassFilter::new(0.1, 1e-3).unwrap();
        let lo = xs.iter().cloned().fold(f64::MAX, f64::min);
        let hi = xs.iter().cloned().fold(f64::MIN, f64::max);
        for x in xs {
            let y = f.step(x);
            prop_assert!(y >= lo - 1e-9 && y <= hi + 1e-9);
        }
    }
}
