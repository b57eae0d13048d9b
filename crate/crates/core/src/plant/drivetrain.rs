use serde::{Deserialize, Serialize};

use crate::PlantError;

/// One knot of a time-varying pinion radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusPoint {
    pub t: f64,
    /// Radius in metres.
    pub d: f64,
}

/// Radial distance from the pinion axis to the rack contact, in metres.
///
/// Constant for the stock rig; a schedule is linearly interpolated and held
/// flat outside its knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PinionRadius {
    Constant(f64),
    Schedule(Vec<RadiusPoint>),
}

impl PinionRadius {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            PinionRadius::Constant(d) => *d,
            PinionRadius::Schedule(points) => {
                let first = points[0];
                if t <= first.t {
                    return first.d;
                }
                for pair in points.windows(2) {
                    let (a, b) = (pair[0], pair[1]);
                    if t <= b.t {
                        let s = (t - a.t) / (b.t - a.t);
                        return a.d + s * (b.d - a.d);
                    }
                }
                points[points.len() - 1].d
            }
        }
    }

    /// Radius used for planning (value at t = 0).
    pub fn nominal(&self) -> f64 {
        self.at(0.0)
    }

    fn validate(&self) -> Result<(), PlantError> {
        match self {
            PinionRadius::Constant(d) if d.is_finite() && *d > 0.0 => Ok(()),
            PinionRadius::Constant(d) => Err(PlantError::Config(format!(
                "pinion radius must be positive, got {d} m"
            ))),
            PinionRadius::Schedule(points) => {
                if points.is_empty() {
                    return Err(PlantError::Config("empty pinion radius schedule".into()));
                }
                if points.iter().any(|p| !(p.d.is_finite() && p.d > 0.0)) {
                    return Err(PlantError::Config(
                        "pinion radius schedule contains a non-positive radius".into(),
                    ));
                }
                if points.windows(2).any(|w| w[1].t <= w[0].t) {
                    return Err(PlantError::Config(
                        "pinion radius schedule times must strictly increase".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Motor, gearbox, rack-and-pinion and encoder of the probing axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveTrain {
    /// Motor turns per pinion turn.
    pub gear_ratio: f64,
    pub pinion_radius: PinionRadius,
    /// N·m/A.
    pub torque_constant: f64,
    /// Encoder line count; quadrature decoding yields four counts per line.
    pub encoder_cpt: u32,
    /// Tool-tip travel per encoder count, micrometres.
    pub linear_resolution_um: f64,
    pub stroke_mm: f64,
    pub stroke_counts: u32,
    /// kg·m².
    pub rotor_inertia: f64,
    /// Motor-side viscous friction, N·m·s/rad.
    pub viscous_friction: f64,
    /// Saturation of the position loop's torque command, N·m.
    pub torque_limit: f64,
}

impl Default for DriveTrain {
    fn default() -> Self {
        Self {
            gear_ratio: 10.0,
            // 200 rpm at the motor moves the tip at 66.6 mm/s.
            pinion_radius: PinionRadius::Constant(0.0318),
            torque_constant: 0.0234,
            encoder_cpt: 1024,
            linear_resolution_um: 1.75,
            stroke_mm: 35.0,
            stroke_counts: 20_000,
            // 9.49 g·cm²
            rotor_inertia: 9.49e-7,
            viscous_friction: 1e-5,
            // 6.51 N at the tool tip with the default gear and pinion.
            torque_limit: 0.0207,
        }
    }
}

impl DriveTrain {
    pub fn validate(&self) -> Result<(), PlantError> {
        self.pinion_radius.validate()?;
        if !(self.gear_ratio.is_finite() && self.gear_ratio >= 1.0) {
            return Err(PlantError::Config(format!(
                "gear ratio must be >= 1, got {}",
                self.gear_ratio
            )));
        }
        let positive = [
            ("torque_constant", self.torque_constant),
            ("linear_resolution_um", self.linear_resolution_um),
            ("stroke_mm", self.stroke_mm),
            ("rotor_inertia", self.rotor_inertia),
            ("torque_limit", self.torque_limit),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(PlantError::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.viscous_friction.is_finite() && self.viscous_friction >= 0.0) {
            return Err(PlantError::Config("viscous friction must be >= 0".into()));
        }
        if self.encoder_cpt == 0 || self.stroke_counts == 0 {
            return Err(PlantError::Config("encoder counts must be positive".into()));
        }
        let travel_um = f64::from(self.stroke_counts) * self.linear_resolution_um;
        if (travel_um - self.stroke_mm * 1000.0).abs() > 1e-6 {
            return Err(PlantError::Config(format!(
                "{} counts x {} um = {travel_um} um does not equal the {} mm stroke",
                self.stroke_counts, self.linear_resolution_um, self.stroke_mm
            )));
        }
        Ok(())
    }

    pub fn counts_per_rev(&self) -> u32 {
        self.encoder_cpt * 4
    }

    pub fn radius_at(&self, t: f64) -> f64 {
        self.pinion_radius.at(t)
    }

    /// Tool-tip speed in mm/s for a motor speed in rpm.
    pub fn rpm_to_mm_s(&self, rpm: f64) -> f64 {
        rpm / 60.0 * std::f64::consts::TAU * self.pinion_radius.nominal() / self.gear_ratio * 1000.0
    }

    /// Rotor inertia seen at the tool tip, kg.
    pub fn reflected_mass(&self, d: f64) -> f64 {
        let n = self.gear_ratio / d;
        self.rotor_inertia * n * n
    }

    /// Motor friction seen at the tool tip, N·s/m.
    pub fn reflected_friction(&self, d: f64) -> f64 {
        let n = self.gear_ratio / d;
        self.viscous_friction * n * n
    }

    /// Largest tool-tip force the saturated position loop can exert, N.
    pub fn force_limit(&self, d: f64) -> f64 {
        self.torque_limit * self.gear_ratio / d
    }

    /// Motor current needed to exert `force` newtons at the tool tip.
    pub fn current_for_force(&self, force: f64, d: f64) -> f64 {
        force * d / (self.gear_ratio * self.torque_constant)
    }

    /// Encoder reading of the tool position, as millimetres.
    pub fn quantize(&self, position_mm: f64) -> f64 {
        let counts = self.counts_unchecked(position_mm.clamp(0.0, self.stroke_mm));
        self.mm_from_counts(counts)
    }

    fn counts_unchecked(&self, position_mm: f64) -> u32 {
        let exact = position_mm * 1000.0 / self.linear_resolution_um;
        let nearest = exact.round();
        // Positions that are an exact multiple of the resolution in decimal
        // land a few ulps either side after the division.
        let counts = if (exact - nearest).abs() <= 1e-6 {
            nearest
        } else {
            exact.floor()
        };
        counts as u32
    }

    fn mm_from_counts(&self, counts: u32) -> f64 {
        f64::from(counts) * self.linear_resolution_um / 1000.0
    }
}

/// Encoder counts for a tool-tip position: `floor(position / resolution)`.
pub fn encoder_counts(position_mm: f64, drivetrain: &DriveTrain) -> Result<u32, PlantError> {
    if !(0.0..=drivetrain.stroke_mm).contains(&position_mm) {
        return Err(PlantError::OutOfRange {
            position_mm,
            stroke_mm: drivetrain.stroke_mm,
        });
    }
    Ok(drivetrain.counts_unchecked(position_mm))
}

pub fn counts_to_mm(counts: u32, drivetrain: &DriveTrain) -> Result<f64, PlantError> {
    if counts > drivetrain.stroke_counts {
        return Err(PlantError::OutOfRange {
            position_mm: drivetrain.mm_from_counts(counts),
            stroke_mm: drivetrain.stroke_mm,
        });
    }
    Ok(drivetrain.mm_from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoder_anchor_points() {
        let dt = DriveTrain::default();
        assert_eq!(encoder_counts(0.0, &dt).unwrap(), 0);
        assert_eq!(encoder_counts(35.0, &dt).unwrap(), 20_000);
        assert_eq!(encoder_counts(0.00175, &dt).unwrap(), 1);
        assert_eq!(encoder_counts(0.0017, &dt).unwrap(), 0);
        assert_eq!(dt.counts_per_rev(), 4096);
    }

    #[test]
    fn encoder_rejects_out_of_stroke() {
        let dt = DriveTrain::default();
        assert!(matches!(
            encoder_counts(35.01, &dt),
            Err(PlantError::OutOfRange { .. })
        ));
        assert!(encoder_counts(-0.001, &dt).is_err());
        assert!(counts_to_mm(20_001, &dt).is_err());
    }

    #[test]
    fn every_count_round_trips() {
        let dt = DriveTrain::default();
        for c in 0..=dt.stroke_counts {
            let mm = counts_to_mm(c, &dt).unwrap();
            assert_eq!(encoder_counts(mm, &dt).unwrap(), c, "count {c}");
        }
    }

    #[test]
    fn default_validates_and_stroke_identity_holds() {
        let dt = DriveTrain::default();
        dt.validate().unwrap();
        assert_eq!(f64::from(dt.stroke_counts) * dt.linear_resolution_um, 35_000.0);
    }

    #[test]
    fn inconsistent_stroke_rejected() {
        let dt = DriveTrain {
            stroke_counts: 19_000,
            ..DriveTrain::default()
        };
        assert!(dt.validate().is_err());
    }

    #[test]
    fn radius_schedule_interpolates() {
        let r = PinionRadius::Schedule(vec![
            RadiusPoint { t: 0.0, d: 0.03 },
            RadiusPoint { t: 1.0, d: 0.04 },
        ]);
        assert_eq!(r.at(-1.0), 0.03);
        assert!((r.at(0.5) - 0.035).abs() < 1e-15);
        assert_eq!(r.at(2.0), 0.04);
    }

    #[test]
    fn default_speed_and_force_ceiling() {
        let dt = DriveTrain::default();
        let v = dt.rpm_to_mm_s(200.0);
        assert!((v - 66.602).abs() < 1e-2, "{v}");
        let f = dt.force_limit(0.0318);
        assert!((f - 6.5094).abs() < 1e-3, "{f}");
    }
}
