//! Deterministic testbed for robotic tool-tissue probing.
//!
//! The crate is split along the signal path of the probing rig:
//!
//! - [`plant`]: tissue contact law, rack-and-pinion drive, trapezoidal motion
//!   planning, encoder quantization and material calibration.
//! - [`estimation`]: force from motor current, a simulated six-axis F/T
//!   sensor, first-order low-pass smoothing and scalar Kalman fusion.
//! - [`vision`]: synthetic top-view frames, edge detection, border following,
//!   dataset building, class probabilities and contour-area regression.
//! - [`harness`]: timed probe/dwell/retract experiments, summary statistics
//!   and telemetry persistence.

pub mod estimation;
pub mod harness;
pub mod plant;
pub mod vision;

mod error;

pub use error::{EstimationError, HarnessError, PlantError, VisionError};
