use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlantError {
    #[error("position {position_mm} mm is outside the stroke [0, {stroke_mm}] mm")]
    OutOfRange { position_mm: f64, stroke_mm: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EstimationError {
    #[error("radial distance must be positive, got {0} m")]
    Kinematics(f64),
    #[error("measurement variance must be positive, got {0}")]
    Variance(f64),
    #[error("timestamp {current} s does not follow {previous} s")]
    TimestampRegression { previous: f64, current: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum VisionError {
    #[error("knife position {0} mm is outside [0, 35] mm")]
    OutOfRange(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("feature {0} is outside [0, 1]")]
    Feature(f64),
    #[error("invalid class probabilities: {0}")]
    Probabilities(String),
    #[error("no closed tissue contour found in frame")]
    NoContour,
    #[error("regression fit failed: {0}")]
    Fit(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("malformed frame data: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image encoding failed: {0}")]
    Image(#[from] image::ImageError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Validation(String),
    #[error("unknown tissue preset `{0}`")]
    UnknownPreset(String),
    #[error("summary window [{start}, {end}) s contains no samples")]
    EmptyWindow { start: f64, end: f64 },
    #[error("run never reached {0}")]
    MissingEvent(&'static str),
    #[error("telemetry schema mismatch: missing column `{0}`")]
    MissingColumn(String),
    #[error("telemetry schema mismatch: {0}")]
    Schema(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Configuration problems are detected before any simulation runs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HarnessError::Validation(_)
                | HarnessError::UnknownPreset(_)
                | HarnessError::Plant(PlantError::Config(_))
                | HarnessError::Plant(PlantError::OutOfRange { .. })
                | HarnessError::Estimation(EstimationError::Config(_))
                | HarnessError::Vision(VisionError::Config(_))
        )
    }
}
