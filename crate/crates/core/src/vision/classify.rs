use serde::{Deserialize, Serialize};

use super::deformation::{ground_truth_deformation, ClassProbabilities, DeformationClass};
use crate::VisionError;

/// Maps the normalised area reduction of a frame to class probabilities.
///
/// The feature is `(A₀ − A) / (A₀ − A_full)`: 0 for an undeformed
/// silhouette, 1 at full deformation.
pub trait Classifier: Send + Sync {
    fn classify(&self, feature: f64) -> Result<ClassProbabilities, VisionError>;

    fn name(&self) -> &str;
}

fn check_feature(feature: f64) -> Result<(), VisionError> {
    if (0.0..=1.0).contains(&feature) {
        Ok(())
    } else {
        Err(VisionError::Feature(feature))
    }
}

/// Softmax of `−|feature − prototypeᵢ| / T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeClassifier {
    pub name: String,
    pub prototypes: [f64; 4],
    pub temperature: f64,
}

/// Default softmax temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.05;

impl PrototypeClassifier {
    pub fn new(name: &str, prototypes: [f64; 4], temperature: f64) -> Result<Self, VisionError> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(VisionError::Config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if prototypes.iter().any(|p| !p.is_finite()) {
            return Err(VisionError::Config("prototypes must be finite".into()));
        }
        Ok(Self {
            name: name.to_string(),
            prototypes,
            temperature,
        })
    }

    /// Prototypes at the nominal fractions 0, 0.33, 0.67, 1.
    pub fn nominal() -> Self {
        Self::new("nominal", [0.0, 0.33, 0.67, 1.0], DEFAULT_TEMPERATURE).expect("valid")
    }

    /// Prototypes at the deformation of each class's position midpoint.
    pub fn range_midpoints() -> Self {
        let protos = DeformationClass::ALL.map(|c| {
            ground_truth_deformation(c.midpoint_mm()).expect("midpoint in range") / 100.0
        });
        Self::new("midpoint", protos, DEFAULT_TEMPERATURE).expect("valid")
    }

    /// Prototypes at the per-class mean feature of labelled samples.
    pub fn fit_centroids(
        samples: &[(f64, DeformationClass)],
        temperature: f64,
    ) -> Result<Self, VisionError> {
        let mut sum = [0.0; 4];
        let mut n = [0usize; 4];
        for (f, c) in samples {
            sum[c.id()] += f;
            n[c.id()] += 1;
        }
        if let Some(missing) = n.iter().position(|k| *k == 0) {
            return Err(VisionError::Fit(format!(
                "no training samples for {}",
                DeformationClass::ALL[missing]
            )));
        }
        let protos = [0, 1, 2, 3].map(|i| sum[i] / n[i] as f64);
        Self::new("centroid", protos, temperature)
    }
}

impl Classifier for PrototypeClassifier {
    fn classify(&self, feature: f64) -> Result<ClassProbabilities, VisionError> {
        check_feature(feature)?;
        let logits = self.prototypes.map(|c| -(feature - c).abs() / self.temperature);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ClassProbabilities::from_weights(logits.map(|l| (l - max).exp()))
    }

    fn name(&self) -> &str {
        &self.name
    }
}
