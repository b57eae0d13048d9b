use serde::{Deserialize, Serialize};

use crate::PlantError;

/// Cured-elastomer data sheet values for a tissue phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialProps {
    pub name: String,
    /// Mixed viscosity, centipoise.
    pub viscosity_cps: f64,
    pub tensile_strength_psi: f64,
    pub elongation_pct: f64,
    /// 100% modulus, psi.
    pub modulus_psi: f64,
}

impl MaterialProps {
    pub fn ecoflex10() -> Self {
        Self {
            name: "ecoflex10".into(),
            viscosity_cps: 14_000.0,
            tensile_strength_psi: 120.0,
            elongation_pct: 800.0,
            modulus_psi: 8.0,
        }
    }

    pub fn ecoflex30() -> Self {
        Self {
            name: "ecoflex30".into(),
            viscosity_cps: 3_000.0,
            tensile_strength_psi: 200.0,
            elongation_pct: 900.0,
            modulus_psi: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let fields = [
            ("viscosity_cps", self.viscosity_cps),
            ("tensile_strength_psi", self.tensile_strength_psi),
            ("elongation_pct", self.elongation_pct),
            ("modulus_psi", self.modulus_psi),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(PlantError::Config(format!(
                    "material `{}`: {name} must be positive, got {value}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}
