use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ForceChannel};
use super::telemetry::TelemetrySample;
use crate::plant::metrics::{force_stats, CONTACT_SETTLE_S};
use crate::plant::{ProbeEvents, ProbeSchedule};
use crate::HarnessError;

/// Aggregates reported for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Mean force before the probe command, N.
    pub rest_force: f64,
    pub avg_contact_force: f64,
    /// Peak of the smoothed force during the probe minus the rest force, N.
    pub force_delta_rest_to_probe: f64,
    /// First contact to target reached, s.
    pub probe_duration: f64,
    /// Change in force across the dwell, N.
    pub dwell_force_drift: f64,
    pub max_force: f64,
    pub first_contact_s: f64,
    pub target_reached_s: f64,
}

/// What [`summarize`] needs besides the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryParams {
    pub schedule: ProbeSchedule,
    pub contact_depth_mm: f64,
    /// Distance from the target that counts as reached, mm.
    pub tolerance_mm: f64,
    pub channel: ForceChannel,
    pub contact_window: Option<(f64, f64)>,
}

impl SummaryParams {
    pub fn from_config(cfg: &ExperimentConfig, contact_depth_mm: f64) -> Self {
        Self {
            schedule: cfg.schedule.clone(),
            contact_depth_mm,
            tolerance_mm: cfg.drivetrain.linear_resolution_um / 1000.0,
            channel: cfg.summary_channel,
            contact_window: cfg.contact_window,
        }
    }
}

pub fn channel_values(samples: &[TelemetrySample], channel: ForceChannel) -> Vec<f64> {
    samples
        .iter()
        .map(|s| match channel {
            ForceChannel::Current => s.f_current,
            ForceChannel::SensorFiltered => s.f_sensor_filtered,
            ForceChannel::Fused => s.f_fused,
        })
        .collect()
}

/// Probe events and force aggregates of a recorded run.
pub fn summarize(samples: &[TelemetrySample], params: &SummaryParams) -> Result<RunSummary, HarnessError> {
    let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
    let positions: Vec<f64> = samples.iter().map(|s| s.actual_pos).collect();
    let events = ProbeEvents::detect(
        &times,
        &positions,
        &params.schedule,
        params.contact_depth_mm,
        params.tolerance_mm,
    );
    let contact = events.first_contact_s.ok_or(HarnessError::MissingEvent("tissue contact"))?;
    let reached = events
        .target_reached_s
        .ok_or(HarnessError::MissingEvent("the probe target"))?;
    let force = channel_values(samples, params.channel);
    let stats = force_stats(&times, &force, &events, params.contact_window).ok_or_else(|| {
        let (start, end) = params
            .contact_window
            .unwrap_or((contact + CONTACT_SETTLE_S, events.retract_command_s));
        HarnessError::EmptyWindow { start, end }
    })?;
    Ok(RunSummary {
        rest_force: stats.rest_force,
        avg_contact_force: stats.avg_contact_force,
        force_delta_rest_to_probe: stats.force_delta,
        probe_duration: stats.probe_duration,
        dwell_force_drift: stats.dwell_force_drift,
        max_force: stats.max_force,
        first_contact_s: contact,
        target_reached_s: reached,
    })
}
