//! Timed probe experiments, run summaries and telemetry files.

mod config;
mod evaluate;
mod rig;
mod summary;
mod telemetry;

pub use config::{ExperimentConfig, ForceChannel, TissueSpec, VisionSettings};
pub use evaluate::{evaluate_vision, VisionReport};
pub use rig::{run_scenario, Rig, RunOutput};
pub use summary::{channel_values, summarize, RunSummary, SummaryParams};
pub use telemetry::{
    read_telemetry, read_telemetry_csv, write_telemetry, write_telemetry_csv, TelemetrySample, TELEMETRY_COLUMNS,
};
