use serde::{Deserialize, Serialize};

use crate::vision::{
    optimized_deformation, predict_deformation, AreaRegressor, Classifier, DatasetRecord, DeformationClass,
    FeatureScale,
};
use crate::{HarnessError, VisionError};

/// Classification and regression quality over a labelled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisionReport {
    pub n: usize,
    /// `None` for classes with no samples.
    pub per_class_accuracy: [Option<f64>; 4],
    /// Rows are true classes, columns predicted classes.
    pub confusion: [[usize; 4]; 4],
    /// Root-mean-square regression error, %.
    pub regression_rmse: f64,
    /// Mean |optimized deformation − ground truth|, %.
    pub mean_abs_optimized_error: f64,
}

impl VisionReport {
    pub fn overall_accuracy(&self) -> f64 {
        let hits: usize = (0..4).map(|i| self.confusion[i][i]).sum();
        hits as f64 / self.n as f64
    }
}

/// Scores `classifier` and `regressor` on the stored contour areas of
/// `records`.
pub fn evaluate_vision(
    records: &[DatasetRecord],
    scale: &FeatureScale,
    classifier: &dyn Classifier,
    regressor: &AreaRegressor,
) -> Result<VisionReport, HarnessError> {
    if records.is_empty() {
        return Err(VisionError::EmptyDataset.into());
    }
    let mut confusion = [[0usize; 4]; 4];
    let (mut se, mut abs_opt) = (0.0, 0.0);
    for r in records {
        let truth = r
            .class()
            .ok_or_else(|| HarnessError::Schema(format!("class id {} in {}", r.class_id, r.frame_path)))?;
        let probs = classifier.classify(scale.feature(r.contour_area_px2))?;
        confusion[truth.id()][probs.argmax().id()] += 1;
        let pred = predict_deformation(regressor, r.contour_area_px2, scale.a0);
        se += (pred - r.ground_truth_pct).powi(2);
        abs_opt += (optimized_deformation(&probs.as_array()) - r.ground_truth_pct).abs();
    }
    let per_class_accuracy = DeformationClass::ALL.map(|c| {
        let row = confusion[c.id()];
        let total: usize = row.iter().sum();
        (total > 0).then(|| row[c.id()] as f64 / total as f64)
    });
    let n = records.len();
    Ok(VisionReport {
        n,
        per_class_accuracy,
        confusion,
        regression_rmse: (se / n as f64).sqrt(),
        mean_abs_optimized_error: abs_opt / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::{fit_area_regressor, AreaSample, PrototypeClassifier};

    fn scale() -> FeatureScale {
        FeatureScale::new(1000.0, 500.0).unwrap()
    }

    fn record(area: f64, class_id: usize, pct: f64) -> DatasetRecord {
        DatasetRecord {
            frame_path: String::new(),
            knife_mm: 0.0,
            class_id,
            ground_truth_pct: pct,
            contour_area_px2: area,
        }
    }

    fn regressor() -> AreaRegressor {
        let s: Vec<_> = [(1000.0, 0.0), (500.0, 100.0)]
            .map(|(area, deformation_pct)| AreaSample { area, deformation_pct })
            .to_vec();
        fit_area_regressor(&s, 1000.0, 1).unwrap()
    }

    #[test]
    fn empty_set_rejected() {
        let c = PrototypeClassifier::range_midpoints();
        assert!(evaluate_vision(&[], &scale(), &c, &regressor()).is_err());
    }

    #[test]
    fn single_class_has_one_confusion_row() {
        let recs = vec![record(1000.0, 0, 0.0); 5];
        let c = PrototypeClassifier::range_midpoints();
        let r = evaluate_vision(&recs, &scale(), &c, &regressor()).unwrap();
        let nonzero = r.confusion.iter().filter(|row| row.iter().any(|v| *v > 0)).count();
        assert_eq!(nonzero, 1);
        assert_eq!(r.per_class_accuracy, [Some(1.0), None, None, None]);
        assert!(r.regression_rmse < 1e-9);
    }

    #[test]
    fn errors_are_brute_force_means() {
        let recs = vec![record(750.0, 2, 40.0), record(600.0, 3, 90.0)];
        let c = PrototypeClassifier::range_midpoints();
        let r = evaluate_vision(&recs, &scale(), &c, &regressor()).unwrap();
        let rmse = ((10.0f64.powi(2) + 10.0f64.powi(2)) / 2.0).sqrt();
        assert!((r.regression_rmse - rmse).abs() < 1e-9);
        assert_eq!(r.confusion[2][2] + r.confusion[3][3], 2);
    }
}
