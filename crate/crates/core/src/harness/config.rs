use serde::{Deserialize, Serialize};

use crate::estimation::ChainConfig;
use crate::plant::{preset, DriveTrain, MotionProfile, ProbeSchedule, TissueModel, DEFAULT_DT};
use crate::vision::{SceneGeometry, DEFAULT_EDGE_THRESHOLD};
use crate::HarnessError;

/// A shipped preset by name, or an explicit contact law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TissueSpec {
    Preset(String),
    Inline(TissueModel),
}

impl Default for TissueSpec {
    fn default() -> Self {
        TissueSpec::Preset("ecoflex10".into())
    }
}

impl TissueSpec {
    pub fn resolve(&self) -> Result<TissueModel, HarnessError> {
        match self {
            TissueSpec::Preset(name) => {
                let p = preset(name).ok_or_else(|| HarnessError::UnknownPreset(name.clone()))?;
                Ok(p.tissue()?)
            }
            TissueSpec::Inline(m) => Ok(m.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TissueSpec::Preset(name) => name.clone(),
            TissueSpec::Inline(_) => "inline".into(),
        }
    }
}

/// Which force channel the run summary is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceChannel {
    /// Estimate from the (noisy) motor current readout.
    #[default]
    Current,
    /// Low-pass filtered axial sensor channel.
    SensorFiltered,
    Fused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisionSettings {
    pub enabled: bool,
    /// Frames analysed per second of simulated time.
    pub rate_hz: f64,
    pub geometry: SceneGeometry,
    pub edge_threshold: f64,
}

impl Default for VisionSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            rate_hz: 10.0,
            geometry: SceneGeometry::default(),
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
        }
    }
}

/// Everything a probe/dwell/retract run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub tissue: TissueSpec,
    /// Replaces the tissue's contact depth, mm.
    pub contact_depth_mm: Option<f64>,
    pub profile: MotionProfile,
    pub schedule: ProbeSchedule,
    pub drivetrain: DriveTrain,
    /// Current noise, sensor, low-pass and fusion settings. The sensor's own
    /// seed is ignored; sensor noise is derived from `seed`.
    pub estimation: ChainConfig,
    pub vision: VisionSettings,
    pub summary_channel: ForceChannel,
    /// Overrides the default `[first contact + 0.3 s, retract)` window.
    pub contact_window: Option<(f64, f64)>,
    pub dt: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tissue: TissueSpec::default(),
            contact_depth_mm: None,
            profile: MotionProfile::default(),
            schedule: ProbeSchedule::default(),
            drivetrain: DriveTrain::default(),
            estimation: ChainConfig::default(),
            vision: VisionSettings::default(),
            summary_channel: ForceChannel::default(),
            contact_window: None,
            dt: DEFAULT_DT,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn for_preset(name: &str) -> Self {
        Self {
            tissue: TissueSpec::Preset(name.into()),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Validation(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The contact law the run will use, with any depth override applied.
    pub fn tissue_model(&self) -> Result<TissueModel, HarnessError> {
        let mut m = self.tissue.resolve()?;
        if let Some(d) = self.contact_depth_mm {
            m.contact_depth_mm = d;
        }
        Ok(m)
    }

    /// Checks everything a run needs; returns the resolved contact law.
    pub fn validate(&self) -> Result<TissueModel, HarnessError> {
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= 0.1) {
            return Err(HarnessError::Validation(format!("dt must lie in (0, 0.1] s, got {}", self.dt)));
        }
        self.drivetrain.validate()?;
        self.profile.validate()?;
        self.schedule.validate(self.drivetrain.stroke_mm)?;
        self.estimation.validate()?;
        if let Some((a, b)) = self.contact_window {
            if !(a < b && a >= 0.0 && b <= self.schedule.end_time_s) {
                return Err(HarnessError::Validation(format!(
                    "contact window [{a}, {b}) is not inside the run"
                )));
            }
        }
        if self.vision.enabled {
            if !(self.vision.rate_hz.is_finite() && self.vision.rate_hz > 0.0) {
                return Err(HarnessError::Validation("vision rate must be positive".into()));
            }
            self.vision.geometry.validate()?;
        }
        let tissue = self.tissue_model()?;
        tissue.validate(self.drivetrain.stroke_mm)?;
        Ok(tissue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let cfg = ExperimentConfig::for_preset("ecoflex30");
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let sparse = ExperimentConfig::from_json(r#"{"tissue": "ecoflex30", "seed": 4}"#).unwrap();
        assert_eq!(sparse.seed, 4);
        assert_eq!(sparse.schedule, ProbeSchedule::default());
    }

    #[test]
    fn inline_tissue_parses() {
        let cfg = ExperimentConfig::from_json(
            r#"{"tissue": {"contact_depth_mm": 12, "stiffness": 0.1, "damping": 0.05}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.tissue, TissueSpec::Inline(_)));
    }

    #[test]
    fn unknown_preset_is_a_validation_error() {
        let e = ExperimentConfig::for_preset("ecoflex99").validate().unwrap_err();
        assert!(matches!(e, HarnessError::UnknownPreset(_)));
        assert!(e.is_validation());
    }

    #[test]
    fn bad_schedule_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.retract_time_s = 1.0;
        assert!(cfg.validate().unwrap_err().is_validation());
    }

    #[test]
    fn depth_override_applies() {
        let cfg = ExperimentConfig {
            tissue: TissueSpec::Inline(TissueModel::free_space()),
            contact_depth_mm: Some(13.0),
            ..ExperimentConfig::default()
        };
        assert_eq!(cfg.validate().unwrap().contact_depth_mm, 13.0);
    }
}
