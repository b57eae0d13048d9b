use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::VisionError;

/// Split sizes and errors recorded when the regressor was fitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub train_n: usize,
    pub val_n: usize,
    pub test_n: usize,
    pub train_rmse: f64,
    pub val_rmse: Option<f64>,
    pub test_rmse: Option<f64>,
}

/// Polynomial map from normalised contour area `A / A₀` to deformation %.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRegressor {
    pub degree: usize,
    /// Lowest power first.
    pub coefficients: Vec<f64>,
    /// Undeformed contour area the fit was normalised by, px².
    pub a0: f64,
    pub meta: TrainingMeta,
}

/// One labelled observation: contour area (px²) and true deformation (%).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaSample {
    pub area: f64,
    pub deformation_pct: f64,
}

/// Least-squares fit of deformation on `area / a0`.
pub fn fit_area_regressor(
    train: &[AreaSample],
    a0: f64,
    degree: usize,
) -> Result<AreaRegressor, VisionError> {
    if !(a0.is_finite() && a0 > 0.0) {
        return Err(VisionError::Config(format!("A0 must be positive, got {a0}")));
    }
    if train.is_empty() {
        return Err(VisionError::EmptyDataset);
    }
    let xs: Vec<f64> = train.iter().map(|s| s.area / a0).collect();
    let ys: Vec<f64> = train.iter().map(|s| s.deformation_pct).collect();
    let mut distinct = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < degree + 1 {
        return Err(VisionError::Fit(format!(
            "{} distinct areas cannot determine a degree-{degree} polynomial",
            distinct.len()
        )));
    }
    let coefficients = least_squares(&xs, &ys, degree)?;
    let mut reg = AreaRegressor {
        degree,
        coefficients,
        a0,
        meta: TrainingMeta {
            train_n: train.len(),
            ..TrainingMeta::default()
        },
    };
    reg.meta.train_rmse = reg.rmse(train);
    Ok(reg)
}

/// Householder QR solve of the Vandermonde system.
fn least_squares(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>, VisionError> {
    let (m, n) = (xs.len(), degree + 1);
    let mut a: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| (0..n).map(|k| x.powi(k as i32)).collect())
        .collect();
    let mut b = ys.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1.0);
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale * (m as f64).sqrt() {
            return Err(VisionError::Fit("rank-deficient design matrix".into()));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }
    let diag_max = (0..n).map(|k| a[k][k].abs()).fold(0.0, f64::max);
    if (0..n).any(|k| a[k][k].abs() <= 1e-10 * diag_max) {
        return Err(VisionError::Fit("rank-deficient design matrix".into()));
    }
    let mut coef = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * coef[j]).sum();
        coef[k] = (b[k] - s) / a[k][k];
    }
    Ok(coef)
}

impl AreaRegressor {
    /// Unclamped polynomial value at normalised area `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Root-mean-square error of the clamped prediction, %.
    pub fn rmse(&self, samples: &[AreaSample]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        let sse: f64 = samples
            .iter()
            .map(|s| (predict_deformation(self, s.area, self.a0) - s.deformation_pct).powi(2))
            .sum();
        (sse / samples.len() as f64).sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("regressor serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), VisionError> {
        std::fs::write(path, self.to_json()).map_err(|source| VisionError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, VisionError> {
        let text = std::fs::read_to_string(path).map_err(|source| VisionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Deformation % for a contour area, clamped to `[0, 100]`.
pub fn predict_deformation(regressor: &AreaRegressor, area: f64, a0: f64) -> f64 {
    regressor.evaluate(area / a0).clamp(0.0, 100.0)
}
