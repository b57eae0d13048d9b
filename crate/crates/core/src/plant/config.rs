use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{calibrate, CalibrationTargets, DriveTrain, MaterialProps, MotionProfile, TissueModel};
use crate::PlantError;

const PRESETS: [(&str, &str); 2] = [
    ("ecoflex10", include_str!("../../presets/ecoflex10.json")),
    ("ecoflex30", include_str!("../../presets/ecoflex30.json")),
];

/// A shipped phantom: data-sheet properties plus the run outcomes its contact
/// law is calibrated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub material: MaterialProps,
    pub targets: CalibrationTargets,
    pub contact_depth_mm: f64,
}

impl Preset {
    /// Calibrated contact law. Results are cached per preset name.
    ///
    /// Calibration runs at the stock 12 mm contact depth; a different
    /// `contact_depth_mm` only moves where the calibrated law engages.
    pub fn tissue(&self) -> Result<TissueModel, PlantError> {
        static CACHE: Mutex<Option<HashMap<String, TissueModel>>> = Mutex::new(None);
        let key = serde_json::to_string(&(&self.material, &self.targets))
            .map_err(|e| PlantError::Config(e.to_string()))?;
        if let Some(m) = CACHE.lock().unwrap().get_or_insert_with(HashMap::new).get(&key) {
            return Ok(TissueModel {
                contact_depth_mm: self.contact_depth_mm,
                ..m.clone()
            });
        }
        let model = calibrate(&self.material, &self.targets)?;
        CACHE
            .lock()
            .unwrap()
            .get_or_insert_with(HashMap::new)
            .insert(key, model.clone());
        Ok(TissueModel {
            contact_depth_mm: self.contact_depth_mm,
            ..model
        })
    }
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Looks up a shipped preset by name.
pub fn preset(name: &str) -> Option<Preset> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, json)| serde_json::from_str(json).expect("shipped preset parses"))
}

/// Everything needed to build a [`super::Plant`], as stored on disk.
///
/// ```json
/// { "tissue": { "contact_depth_mm": 12, "stiffness": 0.1, "damping": 0.03 },
///   "drivetrain": { "gear_ratio": 10 }, "profile": { "max_speed_rpm": 200,
///   "accel_rpm_s": 20000, "decel_rpm_s": 20000 } }
/// ```
///
/// Missing drivetrain fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialProps>,
    pub tissue: TissueModel,
    #[serde(default)]
    pub drivetrain: DriveTrain,
    #[serde(default)]
    pub profile: MotionProfile,
}

impl PlantConfig {
    pub fn from_preset(name: &str) -> Result<Self, PlantError> {
        let p = preset(name).ok_or_else(|| PlantError::Config(format!("unknown preset `{name}`")))?;
        Ok(Self {
            tissue: p.tissue()?,
            material: Some(p.material),
            drivetrain: DriveTrain::default(),
            profile: MotionProfile::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PlantError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| PlantError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plant config serializes")
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        if let Some(m) = &self.material {
            m.validate()?;
        }
        self.drivetrain.validate()?;
        self.profile.validate()?;
        self.tissue.validate(self.drivetrain.stroke_mm)
    }
}
