use serde::{Deserialize, Serialize};

use crate::PlantError;

/// Kelvin–Voigt contact law for the knife entering a phantom.
///
/// `stiffness` and `damping` are per millimetre of penetration past
/// `contact_depth_mm`. A zero-stiffness, zero-damping model behaves as free
/// space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TissueModel {
    /// Tool position at which the blade meets the phantom, mm.
    pub contact_depth_mm: f64,
    /// N/mm.
    pub stiffness: f64,
    /// N·s/mm.
    pub damping: f64,
    /// Extra force on the first contacting step, N.
    #[serde(default)]
    pub puncture_peak: f64,
}

impl TissueModel {
    pub fn free_space() -> Self {
        Self {
            contact_depth_mm: 12.0,
            stiffness: 0.0,
            damping: 0.0,
            puncture_peak: 0.0,
        }
    }

    pub fn validate(&self, stroke_mm: f64) -> Result<(), PlantError> {
        if !(0.0..=stroke_mm).contains(&self.contact_depth_mm) {
            return Err(PlantError::Config(format!(
                "contact depth {} mm outside the {stroke_mm} mm stroke",
                self.contact_depth_mm
            )));
        }
        if !(self.stiffness.is_finite() && self.stiffness >= 0.0) {
            return Err(PlantError::Config(format!(
                "stiffness must be >= 0, got {}",
                self.stiffness
            )));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(PlantError::Config(format!(
                "damping must be >= 0, got {}",
                self.damping
            )));
        }
        if !(self.puncture_peak.is_finite() && self.puncture_peak >= 0.0) {
            return Err(PlantError::Config("puncture peak must be >= 0".into()));
        }
        Ok(())
    }

    pub fn in_contact(&self, depth_mm: f64) -> bool {
        depth_mm >= self.contact_depth_mm
    }
}

/// Reaction force of the phantom on the blade, N.
///
/// Zero before contact; `k·(depth − contact) + c·velocity` clamped at zero
/// afterwards, so a withdrawing blade is never pulled back in.
pub fn reaction_force(model: &TissueModel, depth_mm: f64, velocity_mm_s: f64) -> f64 {
    if !model.in_contact(depth_mm) {
        return 0.0;
    }
    let penetration = depth_mm - model.contact_depth_mm;
    (model.stiffness * penetration + model.damping * velocity_mm_s).max(0.0)
}

/// Adds the puncture transient on the first step that reaches contact.
///
/// Re-arms once the blade leaves the phantom.
#[derive(Debug, Clone, Default)]
pub struct ContactTracker {
    in_contact: bool,
}

impl ContactTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Whether the previous evaluation was in contact.
    pub fn was_in_contact(&self) -> bool {
        self.in_contact
    }

    /// Force without committing the contact state; used while solving a step.
    pub fn peek(&self, model: &TissueModel, depth_mm: f64, velocity_mm_s: f64) -> f64 {
        let base = reaction_force(model, depth_mm, velocity_mm_s);
        if model.in_contact(depth_mm) && !self.in_contact {
            base + model.puncture_peak
        } else {
            base
        }
    }

    /// Records the accepted position of a completed step.
    pub fn commit(&mut self, model: &TissueModel, depth_mm: f64) {
        self.in_contact = model.in_contact(depth_mm);
    }
}
