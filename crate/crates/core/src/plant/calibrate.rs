use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::metrics::{force_stats, ForceStats};
use super::{run_probe, DriveTrain, MaterialProps, MotionProfile, ProbeSchedule, TissueModel};
use crate::PlantError;

/// Relative error allowed between a calibrated run and its targets.
pub const CALIBRATION_TOLERANCE: f64 = 0.05;

/// Outcomes a calibrated phantom should reproduce in the probe scenario.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationTargets {
    /// Mean contact force during the dwell, N.
    pub plateau_force: Option<f64>,
    /// Peak force while probing minus the rest force, N.
    pub force_delta: Option<f64>,
    /// First contact to target reached, s.
    pub probe_duration: Option<f64>,
}

impl CalibrationTargets {
    fn validate(&self) -> Result<(), PlantError> {
        for (name, v) in [
            ("plateau force", self.plateau_force),
            ("force delta", self.force_delta),
            ("probe duration", self.probe_duration),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(PlantError::Calibration(format!(
                        "{name} target must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Maps material properties to contact-law parameters.
///
/// Stiffness scales with the tensile modulus through a constant fixed on a
/// reference phantom. Damping is solved per material from a dynamic target
/// when one is given, falling back to a per-centipoise constant from the
/// reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrator {
    pub drivetrain: DriveTrain,
    pub profile: MotionProfile,
    pub schedule: ProbeSchedule,
    pub contact_depth_mm: f64,
    /// N/mm per psi.
    pub stiffness_per_psi: f64,
    /// N·s/mm per cP.
    pub damping_per_cps: f64,
}

impl Calibrator {
    /// Fixes the proportionality constants from a reference phantom whose
    /// plateau and delta are both known.
    pub fn from_reference(
        reference: &MaterialProps,
        targets: &CalibrationTargets,
        drivetrain: DriveTrain,
        profile: MotionProfile,
        schedule: ProbeSchedule,
        contact_depth_mm: f64,
    ) -> Result<Self, PlantError> {
        reference
            .validate()
            .map_err(|e| PlantError::Calibration(e.to_string()))?;
        targets.validate()?;
        let (Some(plateau), Some(delta)) = (targets.plateau_force, targets.force_delta) else {
            return Err(PlantError::Calibration(
                "reference calibration needs plateau and delta targets".into(),
            ));
        };
        let mut cal = Self {
            drivetrain,
            profile,
            schedule,
            contact_depth_mm,
            stiffness_per_psi: 0.0,
            damping_per_cps: 0.0,
        };
        let penetration = cal.schedule.probe_target_mm - contact_depth_mm;
        if penetration <= 0.0 {
            return Err(PlantError::Calibration(
                "probe target does not reach the phantom".into(),
            ));
        }
        let mut k = plateau / penetration;
        let mut c = 0.0;
        // Plateau depends almost only on k and delta mostly on c, so a few
        // alternating one-dimensional solves converge.
        for _ in 0..4 {
            k = cal.solve(0.0, 4.0 * k.max(1e-3), plateau, |s| s.avg_contact_force, |k| {
                cal.model(k, c)
            })?;
            c = cal.solve(0.0, 0.05, delta, |s| s.force_delta, |c| cal.model(k, c))?;
        }
        cal.stiffness_per_psi = k / reference.modulus_psi;
        cal.damping_per_cps = c / reference.viscosity_cps;
        let model = cal.model(k, c);
        cal.verify(&model, targets)?;
        Ok(cal)
    }

    /// Contact-law parameters for `material`, checked against `targets`.
    ///
    /// A plateau target is verified rather than solved, since stiffness is
    /// fixed by the modulus.
    pub fn calibrate(
        &self,
        material: &MaterialProps,
        targets: &CalibrationTargets,
    ) -> Result<TissueModel, PlantError> {
        material
            .validate()
            .map_err(|e| PlantError::Calibration(e.to_string()))?;
        targets.validate()?;
        let k = self.stiffness_per_psi * material.modulus_psi;
        let kinematic = self.stats(&self.model(k, 0.0))?.probe_duration;
        let c = match (targets.probe_duration, targets.force_delta) {
            (Some(dur), _) if dur > kinematic * (1.0 + CALIBRATION_TOLERANCE) => {
                self.solve(0.0, 0.05, dur, |s| s.probe_duration, |c| self.model(k, c))?
            }
            (_, Some(delta)) => self.solve(0.0, 0.05, delta, |s| s.force_delta, |c| self.model(k, c))?,
            _ => self.damping_per_cps * material.viscosity_cps,
        };
        let model = self.model(k, c);
        self.verify(&model, targets)?;
        Ok(model)
    }

    /// Runs the scenario and returns its force aggregates.
    pub fn stats(&self, model: &TissueModel) -> Result<ForceStats, PlantError> {
        let trace = run_probe(&self.drivetrain, &self.profile, model, &self.schedule)?;
        force_stats(&trace.times(), &trace.motor_forces(), &trace.events, None).ok_or_else(|| {
            PlantError::Calibration("scenario never reached contact and target".into())
        })
    }

    fn model(&self, stiffness: f64, damping: f64) -> TissueModel {
        TissueModel {
            contact_depth_mm: self.contact_depth_mm,
            stiffness,
            damping,
            puncture_peak: 0.0,
        }
    }

    fn verify(&self, model: &TissueModel, targets: &CalibrationTargets) -> Result<(), PlantError> {
        let stats = self.stats(model)?;
        let checks = [
            ("plateau force", targets.plateau_force, stats.avg_contact_force),
            ("force delta", targets.force_delta, stats.force_delta),
            ("probe duration", targets.probe_duration, stats.probe_duration),
        ];
        for (name, target, got) in checks {
            if let Some(target) = target {
                if ((got - target) / target).abs() > CALIBRATION_TOLERANCE {
                    return Err(PlantError::Calibration(format!(
                        "{name} {got:.4} misses target {target:.4} (stiffness {:.5} N/mm, damping {:.5} N·s/mm)",
                        model.stiffness, model.damping
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bisection on a parameter whose metric is non-decreasing in it.
    fn solve(
        &self,
        lo: f64,
        hi: f64,
        target: f64,
        metric: impl Fn(&ForceStats) -> f64,
        model: impl Fn(f64) -> TissueModel,
    ) -> Result<f64, PlantError> {
        // A run too slow to reach the target before retracting lies above
        // any finite target.
        let eval = |p: f64| -> Result<f64, PlantError> {
            let trace = run_probe(&self.drivetrain, &self.profile, &model(p), &self.schedule)?;
            Ok(
                force_stats(&trace.times(), &trace.motor_forces(), &trace.events, None)
                    .map_or(f64::INFINITY, |s| metric(&s)),
            )
        };
        let (mut lo, mut hi) = (lo, hi);
        if eval(lo)? > target {
            return Err(PlantError::Calibration(format!(
                "target {target} is below what a zero parameter already produces"
            )));
        }
        let mut grown = 0;
        while eval(hi)? < target {
            lo = hi;
            hi *= 2.0;
            grown += 1;
            if grown > 20 {
                return Err(PlantError::Calibration(format!(
                    "target {target} is unreachable"
                )));
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if eval(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Reference targets of the soft phantom.
pub fn ecoflex10_targets() -> CalibrationTargets {
    CalibrationTargets {
        plateau_force: Some(2.26),
        force_delta: Some(4.66),
        probe_duration: Some(0.35),
    }
}

/// Targets of the hard phantom.
pub fn ecoflex30_targets() -> CalibrationTargets {
    CalibrationTargets {
        plateau_force: None,
        force_delta: Some(6.51),
        probe_duration: Some(1.21),
    }
}

/// The stock calibrator: default drivetrain, profile and schedule, 12 mm
/// contact, referenced to EcoFlex 10.
pub fn default_calibrator() -> Result<&'static Calibrator, PlantError> {
    static CAL: OnceLock<Result<Calibrator, PlantError>> = OnceLock::new();
    CAL.get_or_init(|| {
        Calibrator::from_reference(
            &MaterialProps::ecoflex10(),
            &ecoflex10_targets(),
            DriveTrain::default(),
            MotionProfile::default(),
            ProbeSchedule::default(),
            12.0,
        )
    })
    .as_ref()
    .map_err(Clone::clone)
}

/// Calibrates `material` with the stock calibrator.
pub fn calibrate(
    material: &MaterialProps,
    targets: &CalibrationTargets,
) -> Result<TissueModel, PlantError> {
    default_calibrator()?.calibrate(material, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_reference_hits_targets() {
        let model = calibrate(&MaterialProps::ecoflex10(), &ecoflex10_targets()).unwrap();
        let s = default_calibrator().unwrap().stats(&model).unwrap();
        assert!((s.avg_contact_force - 2.26).abs() < 0.11, "{s:?}");
        assert!((s.force_delta - 4.66).abs() < 0.233, "{s:?}");
        assert!((s.probe_duration - 0.35).abs() < 0.035, "{s:?}");
    }

    #[test]
    fn hard_is_stiffer_and_hits_targets() {
        let soft = calibrate(&MaterialProps::ecoflex10(), &ecoflex10_targets()).unwrap();
        let hard = calibrate(&MaterialProps::ecoflex30(), &ecoflex30_targets()).unwrap();
        assert!(hard.stiffness > soft.stiffness);
        let s = default_calibrator().unwrap().stats(&hard).unwrap();
        assert!((s.force_delta - 6.51).abs() < 0.33, "{s:?}");
        assert!((s.probe_duration - 1.21).abs() < 0.121, "{s:?}");
    }

    #[test]
    fn doubling_modulus_increases_stiffness() {
        let base = MaterialProps::ecoflex10();
        let doubled = MaterialProps {
            modulus_psi: base.modulus_psi * 2.0,
            ..base.clone()
        };
        let t = CalibrationTargets::default();
        let a = calibrate(&base, &t).unwrap();
        let b = calibrate(&doubled, &t).unwrap();
        assert!(b.stiffness > a.stiffness);
    }

    #[test]
    fn infeasible_target_is_an_error() {
        let t = CalibrationTargets {
            plateau_force: Some(-1.0),
            ..CalibrationTargets::default()
        };
        assert!(matches!(
            calibrate(&MaterialProps::ecoflex10(), &t),
            Err(PlantError::Calibration(_))
        ));
        let t = CalibrationTargets {
            plateau_force: Some(20.0),
            ..CalibrationTargets::default()
        };
        assert!(calibrate(&MaterialProps::ecoflex10(), &t).is_err());
    }
}
