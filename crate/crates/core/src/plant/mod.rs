//! Physics of the two-axis probing rig, restricted to the probing axis.
//!
//! Positions are tool-tip millimetres along the stroke, velocities mm/s,
//! forces newtons at the tool tip. Rotary quantities (motor torque, rotor
//! inertia, viscous friction) are reflected through the gear and pinion only
//! inside [`DriveTrain`].

mod calibrate;
mod config;
mod drivetrain;
mod material;
mod motor;
mod profile;
mod scenario;
mod tissue;

pub mod metrics;

pub use calibrate::{
    calibrate, default_calibrator, ecoflex10_targets, ecoflex30_targets, CalibrationTargets,
    Calibrator, CALIBRATION_TOLERANCE,
};
pub use config::{preset, preset_names, PlantConfig, Preset};
pub use drivetrain::{encoder_counts, counts_to_mm, DriveTrain, PinionRadius, RadiusPoint};
pub use material::MaterialProps;
pub use motor::{step, ConstantLoad, Load, MotorState};
pub use profile::{plan_trapezoid, MotionProfile, Setpoint, Trajectory};
pub use scenario::{run_probe, Plant, PlantSample, ProbeEvents, ProbeSchedule, ProbeTrace};
pub use tissue::{reaction_force, ContactTracker, TissueModel};

/// Fixed simulation step (1 kHz).
pub const DEFAULT_DT: f64 = 1e-3;
