use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::classify::{Classifier, PrototypeClassifier};
use super::contours::trace_contours;
use super::deformation::{optimized_deformation, ClassProbabilities, DecisionRule, DeformationClass, STROKE_MM};
use super::edges::detect_edges;
use super::frame::Frame;
use super::regress::{predict_deformation, AreaRegressor};
use super::render::{render_frame, SceneGeometry};
use crate::VisionError;

/// Area of the largest closed contour in `frame`, or `None` when nothing
/// closed is found.
pub fn measure_area(frame: &Frame, edge_threshold: f64) -> Result<Option<f64>, VisionError> {
    let edges = detect_edges(frame, edge_threshold)?;
    Ok(trace_contours(&edges)
        .into_iter()
        .map(|c| c.area)
        .max_by(f64::total_cmp))
}

/// Contour areas of the undeformed and fully deformed silhouettes, used to
/// turn a measured area into the reduction fraction the classifier expects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub a0: f64,
    pub a_full: f64,
}

impl FeatureScale {
    pub fn new(a0: f64, a_full: f64) -> Result<Self, VisionError> {
        if !(a0.is_finite() && a_full.is_finite() && a0 > a_full && a_full >= 0.0) {
            return Err(VisionError::Config(format!(
                "need A0 > A_full >= 0, got {a0} and {a_full}"
            )));
        }
        Ok(Self { a0, a_full })
    }

    /// Measured on clean renders at the two ends of the stroke.
    pub fn from_geometry(geometry: &SceneGeometry, edge_threshold: f64) -> Result<Self, VisionError> {
        let area = |p: f64| -> Result<f64, VisionError> {
            measure_area(&render_frame(p, geometry)?, edge_threshold)?.ok_or(VisionError::NoContour)
        };
        Self::new(area(0.0)?, area(STROKE_MM)?)
    }

    /// `(A0 − A) / (A0 − A_full)` clamped to `[0, 1]`.
    pub fn feature(&self, area: f64) -> f64 {
        ((self.a0 - area) / (self.a0 - self.a_full)).clamp(0.0, 1.0)
    }
}

/// Everything the pipeline reads off one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub area: f64,
    pub feature: f64,
    pub probabilities: ClassProbabilities,
    pub class: DeformationClass,
    pub optimized_pct: f64,
    pub decided_pct: f64,
    pub regressed_pct: Option<f64>,
}

/// Frame → edges → contour area → class probabilities and deformation.
#[derive(Clone)]
pub struct VisionPipeline {
    pub edge_threshold: f64,
    pub scale: FeatureScale,
    pub rule: DecisionRule,
    classifier: Arc<dyn Classifier>,
    regressor: Option<AreaRegressor>,
}

impl std::fmt::Debug for VisionPipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VisionPipeline")
            .field("edge_threshold", &self.edge_threshold)
            .field("scale", &self.scale)
            .field("rule", &self.rule)
            .field("classifier", &self.classifier.name())
            .field("regressor", &self.regressor)
            .finish()
    }
}

impl VisionPipeline {
    /// Midpoint-prototype classifier, no regressor.
    pub fn new(geometry: &SceneGeometry, edge_threshold: f64) -> Result<Self, VisionError> {
        Ok(Self {
            edge_threshold,
            scale: FeatureScale::from_geometry(geometry, edge_threshold)?,
            rule: DecisionRule::default(),
            classifier: Arc::new(PrototypeClassifier::range_midpoints()),
            regressor: None,
        })
    }

    pub fn with_classifier(mut self, classifier: impl Classifier + 'static) -> Self {
        self.classifier = Arc::new(classifier);
        self
    }

    pub fn with_regressor(mut self, regressor: AreaRegressor) -> Self {
        self.regressor = Some(regressor);
        self
    }

    pub fn classifier(&self) -> &dyn Classifier {
        self.classifier.as_ref()
    }

    pub fn regressor(&self) -> Option<&AreaRegressor> {
        self.regressor.as_ref()
    }

    pub fn analyze(&self, frame: &Frame) -> Result<Analysis, VisionError> {
        let area = measure_area(frame, self.edge_threshold)?.ok_or(VisionError::NoContour)?;
        self.analyze_area(area)
    }

    /// The part of [`analyze`](Self::analyze) after the area is known.
    pub fn analyze_area(&self, area: f64) -> Result<Analysis, VisionError> {
        let feature = self.scale.feature(area);
        let probabilities = self.classifier.classify(feature)?;
        Ok(Analysis {
            area,
            feature,
            class: probabilities.argmax(),
            optimized_pct: optimized_deformation(&probabilities.as_array()),
            decided_pct: self.rule.decide(&probabilities),
            regressed_pct: self
                .regressor
                .as_ref()
                .map(|r| predict_deformation(r, area, self.scale.a0)),
            probabilities,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::{ground_truth_deformation, DEFAULT_EDGE_THRESHOLD};

    #[test]
    fn scale_endpoints() {
        let s = FeatureScale::from_geometry(&SceneGeometry::default(), DEFAULT_EDGE_THRESHOLD).unwrap();
        assert!(s.a0 > s.a_full);
        assert_eq!(s.feature(s.a0), 0.0);
        assert_eq!(s.feature(s.a_full), 1.0);
        assert_eq!(s.feature(s.a0 + 10.0), 0.0);
        assert!(FeatureScale::new(1.0, 2.0).is_err());
    }

    #[test]
    fn empty_frame_has_no_contour() {
        let p = VisionPipeline::new(&SceneGeometry::default(), DEFAULT_EDGE_THRESHOLD).unwrap();
        let f = Frame::filled(64, 64, 20).unwrap();
        assert!(matches!(p.analyze(&f), Err(VisionError::NoContour)));
    }

    #[test]
    fn midpoint_frames_classify_correctly() {
        let g = SceneGeometry::default();
        let p = VisionPipeline::new(&g, DEFAULT_EDGE_THRESHOLD).unwrap();
        for c in DeformationClass::ALL {
            let a = p.analyze(&render_frame(c.midpoint_mm(), &g).unwrap()).unwrap();
            assert_eq!(a.class, c, "{a:?}");
        }
    }

    #[test]
    fn feature_tracks_ground_truth() {
        let g = SceneGeometry::default();
        let p = VisionPipeline::new(&g, DEFAULT_EDGE_THRESHOLD).unwrap();
        for pos in [13.0, 20.0, 25.9, 31.0] {
            let a = p.analyze(&render_frame(pos, &g).unwrap()).unwrap();
            let gt = ground_truth_deformation(pos).unwrap() / 100.0;
            assert!((a.feature - gt).abs() < 0.02, "{pos}: {} vs {gt}", a.feature);
        }
    }
}
