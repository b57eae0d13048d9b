use serde::{Deserialize, Serialize};

use super::motor::{step, MotorState};
use super::profile::{plan_trapezoid, MotionProfile, Trajectory};
use super::tissue::{ContactTracker, TissueModel};
use super::{DriveTrain, DEFAULT_DT};
use crate::PlantError;

/// Timed probe, dwell and retract commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSchedule {
    pub probe_time_s: f64,
    pub probe_target_mm: f64,
    pub retract_time_s: f64,
    pub retract_target_mm: f64,
    pub end_time_s: f64,
}

impl Default for ProbeSchedule {
    fn default() -> Self {
        Self {
            probe_time_s: 3.42,
            probe_target_mm: 35.0,
            retract_time_s: 6.33,
            retract_target_mm: 0.0,
            end_time_s: 8.0,
        }
    }
}

impl ProbeSchedule {
    pub fn validate(&self, stroke_mm: f64) -> Result<(), PlantError> {
        if !(self.probe_time_s >= 0.0
            && self.probe_time_s < self.retract_time_s
            && self.retract_time_s < self.end_time_s
            && self.end_time_s.is_finite())
        {
            return Err(PlantError::Config(format!(
                "schedule times must strictly increase: probe {} s, retract {} s, end {} s",
                self.probe_time_s, self.retract_time_s, self.end_time_s
            )));
        }
        for p in [self.probe_target_mm, self.retract_target_mm] {
            if !(0.0..=stroke_mm).contains(&p) {
                return Err(PlantError::OutOfRange {
                    position_mm: p,
                    stroke_mm,
                });
            }
        }
        Ok(())
    }
}

/// A move that has not settled this long after its trajectory ends is
/// treated as stalled against the load and no longer counts as in progress.
const SETTLE_TIMEOUT_S: f64 = 5.0;

/// One plant step as seen from outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSample {
    pub time_s: f64,
    /// Trajectory setpoint fed to the position loop.
    pub commanded_mm: f64,
    pub position_mm: f64,
    pub velocity_mm_s: f64,
    pub current_a: f64,
    /// Tool-tip force implied by the motor current, N.
    pub motor_force_n: f64,
    /// Force the phantom exerts on the blade, N.
    pub tissue_force_n: f64,
}

#[derive(Debug, Clone)]
struct ActiveMove {
    trajectory: Trajectory,
    start_step: u64,
}

/// A single probing axis pressing into one phantom.
///
/// Time advances in whole steps of `dt`; the sample time is `k·dt` rather
/// than an accumulated sum.
#[derive(Debug, Clone)]
pub struct Plant {
    drivetrain: DriveTrain,
    profile: MotionProfile,
    tissue: TissueModel,
    dt: f64,
    state: MotorState,
    tracker: ContactTracker,
    active: Option<ActiveMove>,
    setpoint: f64,
    steps: u64,
}

impl Plant {
    pub fn new(
        drivetrain: DriveTrain,
        profile: MotionProfile,
        tissue: TissueModel,
        start_mm: f64,
    ) -> Result<Self, PlantError> {
        drivetrain.validate()?;
        profile.validate()?;
        tissue.validate(drivetrain.stroke_mm)?;
        if !(0.0..=drivetrain.stroke_mm).contains(&start_mm) {
            return Err(PlantError::OutOfRange {
                position_mm: start_mm,
                stroke_mm: drivetrain.stroke_mm,
            });
        }
        let mut tracker = ContactTracker::new();
        tracker.commit(&tissue, start_mm);
        Ok(Self {
            drivetrain,
            profile,
            tissue,
            dt: DEFAULT_DT,
            state: MotorState::at_rest(start_mm),
            tracker,
            active: None,
            setpoint: start_mm,
            steps: 0,
        })
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self, PlantError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(PlantError::Config(format!("dt must be positive, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn state(&self) -> &MotorState {
        &self.state
    }

    pub fn drivetrain(&self) -> &DriveTrain {
        &self.drivetrain
    }

    pub fn profile(&self) -> &MotionProfile {
        &self.profile
    }

    pub fn tissue(&self) -> &TissueModel {
        &self.tissue
    }

    pub fn set_tissue(&mut self, tissue: TissueModel) -> Result<(), PlantError> {
        tissue.validate(self.drivetrain.stroke_mm)?;
        self.tracker = ContactTracker::new();
        self.tracker.commit(&tissue, self.state.position_mm);
        self.tissue = tissue;
        Ok(())
    }

    pub fn set_profile(&mut self, profile: MotionProfile) -> Result<(), PlantError> {
        profile.validate()?;
        self.profile = profile;
        Ok(())
    }

    /// True while a planned move is running or the tool has not yet settled
    /// on its target (bounded by a stall timeout).
    pub fn is_moving(&self) -> bool {
        self.active.is_some()
    }

    /// Starts a move from the current position; replaces any move in progress.
    pub fn command_move(&mut self, target_mm: f64) -> Result<(), PlantError> {
        let start = self.state.position_mm;
        let trajectory = plan_trapezoid(start, target_mm, &self.profile, &self.drivetrain)?;
        self.state.commanded_target_mm = target_mm;
        self.setpoint = start;
        self.active = if trajectory.is_empty() && start == target_mm {
            None
        } else {
            Some(ActiveMove {
                trajectory,
                start_step: self.steps,
            })
        };
        Ok(())
    }

    /// Setpoint the position loop will be asked to reach on the next step.
    pub fn commanded_position(&self) -> f64 {
        self.setpoint
    }

    pub fn step(&mut self) -> PlantSample {
        let next = self.steps + 1;
        if let Some(active) = &self.active {
            let elapsed = (next - active.start_step) as f64 * self.dt;
            self.setpoint = active.trajectory.sample(elapsed).0;
        }
        let tissue = &self.tissue;
        let tracker = &self.tracker;
        let load = |x: f64, v: f64| tracker.peek(tissue, x, v);
        let mut state = step(
            &self.state,
            self.setpoint,
            self.dt,
            &load,
            &self.drivetrain,
        );
        let tissue_force = self
            .tracker
            .peek(&self.tissue, state.position_mm, state.velocity_mm_s);
        self.tracker.commit(&self.tissue, state.position_mm);
        self.steps = next;
        state.time_s = self.time();
        self.state = state;

        if let Some(active) = &self.active {
            let elapsed = (next - active.start_step) as f64 * self.dt;
            let settled = (state.position_mm - active.trajectory.target()).abs()
                <= self.drivetrain.linear_resolution_um / 1000.0;
            let overdue = elapsed >= active.trajectory.duration() + SETTLE_TIMEOUT_S;
            if elapsed >= active.trajectory.duration() && settled || overdue {
                self.active = None;
            }
        }
        self.sample_with(tissue_force)
    }

    /// Sample describing the current state without stepping.
    pub fn sample(&self) -> PlantSample {
        let f = crate::plant::reaction_force(
            &self.tissue,
            self.state.position_mm,
            self.state.velocity_mm_s,
        );
        self.sample_with(f)
    }

    fn sample_with(&self, tissue_force: f64) -> PlantSample {
        let d = self.drivetrain.radius_at(self.state.time_s);
        PlantSample {
            time_s: self.time(),
            commanded_mm: self.setpoint,
            position_mm: self.state.position_mm,
            velocity_mm_s: self.state.velocity_mm_s,
            current_a: self.state.current_a,
            motor_force_n: self.state.current_a * self.drivetrain.torque_constant
                * self.drivetrain.gear_ratio
                / d,
            tissue_force_n: tissue_force,
        }
    }
}

/// Event times recovered from a position trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeEvents {
    pub probe_command_s: f64,
    pub first_contact_s: Option<f64>,
    pub target_reached_s: Option<f64>,
    pub retract_command_s: f64,
}

impl ProbeEvents {
    /// First contact: first sample after the probe command at or past the
    /// contact depth. Target reached: first sample within one encoder count
    /// of the probe target.
    pub fn detect(
        times: &[f64],
        positions: &[f64],
        schedule: &ProbeSchedule,
        contact_depth_mm: f64,
        tolerance_mm: f64,
    ) -> Self {
        let after_probe = || {
            times
                .iter()
                .zip(positions)
                .filter(|(t, _)| **t >= schedule.probe_time_s && **t < schedule.retract_time_s)
        };
        let first_contact_s = after_probe()
            .find(|(_, p)| **p >= contact_depth_mm)
            .map(|(t, _)| *t);
        let target_reached_s = after_probe()
            .find(|(_, p)| (**p - schedule.probe_target_mm).abs() <= tolerance_mm)
            .map(|(t, _)| *t);
        Self {
            probe_command_s: schedule.probe_time_s,
            first_contact_s,
            target_reached_s,
            retract_command_s: schedule.retract_time_s,
        }
    }

    /// First contact to target reached.
    pub fn probe_duration(&self) -> Option<f64> {
        match (self.first_contact_s, self.target_reached_s) {
            (Some(a), Some(b)) if b >= a => Some(b - a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeTrace {
    pub samples: Vec<PlantSample>,
    pub events: ProbeEvents,
}

impl ProbeTrace {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time_s).collect()
    }

    pub fn motor_forces(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.motor_force_n).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.position_mm).collect()
    }
}

/// Runs the schedule from rest at 0 mm with no sensing attached.
pub fn run_probe(
    drivetrain: &DriveTrain,
    profile: &MotionProfile,
    tissue: &TissueModel,
    schedule: &ProbeSchedule,
) -> Result<ProbeTrace, PlantError> {
    schedule.validate(drivetrain.stroke_mm)?;
    let mut plant = Plant::new(drivetrain.clone(), *profile, tissue.clone(), 0.0)?;
    let dt = plant.dt();
    let steps = (schedule.end_time_s / dt).round() as u64;
    let probe_step = (schedule.probe_time_s / dt).round() as u64;
    let retract_step = (schedule.retract_time_s / dt).round() as u64;
    let mut samples = Vec::with_capacity(steps as usize + 1);
    samples.push(plant.sample());
    for k in 0..steps {
        if k == probe_step {
            plant.command_move(schedule.probe_target_mm)?;
        } else if k == retract_step {
            plant.command_move(schedule.retract_target_mm)?;
        }
        samples.push(plant.step());
    }
    let times: Vec<f64> = samples.iter().map(|s| s.time_s).collect();
    let positions: Vec<f64> = samples.iter().map(|s| s.position_mm).collect();
    let events = ProbeEvents::detect(
        &times,
        &positions,
        schedule,
        tissue.contact_depth_mm,
        drivetrain.linear_resolution_um / 1000.0,
    );
    Ok(ProbeTrace { samples, events })
}
