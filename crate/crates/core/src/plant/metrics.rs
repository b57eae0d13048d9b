//! Summary statistics of a probe run, shared by calibration and the harness.

use super::ProbeEvents;

/// Width of the centred moving average applied before peak picking.
pub const SMOOTHING_SAMPLES: usize = 25;
/// Length of the rest window immediately before the probe command, s.
pub const REST_WINDOW_S: f64 = 0.5;
/// Delay after first contact before the contact-force average starts, s.
pub const CONTACT_SETTLE_S: f64 = 0.3;
/// Length of each end of the dwell used for drift, s.
pub const DRIFT_WINDOW_S: f64 = 0.1;

/// Centred moving average; the window shrinks at the ends of the series.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 || window <= 1 {
        return values.to_vec();
    }
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Mean of `values` whose time lies in `[start, end)`.
pub fn window_mean(times: &[f64], values: &[f64], start: f64, end: f64) -> Option<f64> {
    let (sum, n) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= start && **t < end)
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Largest value whose time lies in `[start, end]`.
pub fn window_max(times: &[f64], values: &[f64], start: f64, end: f64) -> Option<f64> {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= start && **t <= end)
        .map(|(_, v)| *v)
        .reduce(f64::max)
}

/// Aggregates of a force channel over one probe run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceStats {
    pub rest_force: f64,
    pub avg_contact_force: f64,
    pub force_delta: f64,
    pub probe_duration: f64,
    pub dwell_force_drift: f64,
    pub max_force: f64,
}

/// Computes run aggregates of `force` given detected events.
///
/// `contact_window` overrides the default `[first contact + 0.3 s, retract)`.
/// Returns `None` when an event is missing or a window holds no samples.
pub fn force_stats(
    times: &[f64],
    force: &[f64],
    events: &ProbeEvents,
    contact_window: Option<(f64, f64)>,
) -> Option<ForceStats> {
    let contact = events.first_contact_s?;
    let reached = events.target_reached_s?;
    let smooth = moving_average(force, SMOOTHING_SAMPLES);
    let rest = window_mean(
        times,
        force,
        events.probe_command_s - REST_WINDOW_S,
        events.probe_command_s,
    )?;
    let peak = window_max(times, &smooth, events.probe_command_s, reached)?;
    let (w0, w1) =
        contact_window.unwrap_or((contact + CONTACT_SETTLE_S, events.retract_command_s));
    let avg = window_mean(times, force, w0, w1)?;
    let dwell_end = events.retract_command_s;
    let drift = window_mean(times, force, dwell_end - DRIFT_WINDOW_S, dwell_end)?
        - window_mean(times, force, reached, reached + DRIFT_WINDOW_S)?;
    let max_force = smooth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(ForceStats {
        rest_force: rest,
        avg_contact_force: avg,
        force_delta: peak - rest,
        probe_duration: reached - contact,
        dwell_force_drift: drift,
        max_force,
    })
}
