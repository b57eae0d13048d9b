use serde::{Deserialize, Serialize};
use tissuebench_core::harness::TelemetrySample;
use tissuebench_core::vision::{Analysis, DeformationClass};

/// One telemetry message on the websocket. Times in s, positions in mm,
/// current in A, forces in N, areas in px², deformation in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryMessage {
    pub t: f64,
    pub cmd_pos: f64,
    /// Encoder position.
    pub pos: f64,
    pub current: f64,
    pub f_current: f64,
    /// Low-pass filtered axial sensor force.
    pub f_sensor: f64,
    pub f_fused: f64,
    /// `null` while vision is disabled.
    pub class: Option<DeformationClass>,
    pub class_probs: Option<[f64; 4]>,
    pub deformation_pct: Option<f64>,
    pub contour_area: Option<f64>,
}

impl TelemetryMessage {
    pub fn new(s: &TelemetrySample, analysis: Option<&Analysis>) -> Self {
        Self {
            t: s.time,
            cmd_pos: s.commanded_pos,
            pos: s.actual_pos,
            current: s.current,
            f_current: s.f_current,
            f_sensor: s.f_sensor_filtered,
            f_fused: s.f_fused,
            class: s.deformation_class,
            class_probs: analysis.map(|a| a.probabilities.as_array()),
            deformation_pct: s.deformation_pct,
            contour_area: s.contour_area,
        }
    }
}
