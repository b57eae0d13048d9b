use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tissuebench_core::harness::ForceChannel;

/// Tool-tissue probing testbed.
#[derive(Debug, Parser)]
#[command(name = "tissuebench", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probe one tissue and write the telemetry CSV; prints the run summary.
    Probe(ProbeArgs),
    /// Run the same schedule on two tissues and tabulate the summaries.
    Compare(CompareArgs),
    /// Synthetic frame datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Contour-area regressor.
    #[command(subcommand)]
    Regressor(RegressorCommand),
    /// Vision pipeline evaluation.
    #[command(subcommand)]
    Vision(VisionCommand),
    /// Start the live HTTP/WebSocket session.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Channel {
    Current,
    Sensor,
    Fused,
}

impl From<Channel> for ForceChannel {
    fn from(c: Channel) -> Self {
        match c {
            Channel::Current => ForceChannel::Current,
            Channel::Sensor => ForceChannel::SensorFiltered,
            Channel::Fused => ForceChannel::Fused,
        }
    }
}

/// Options shared by the run commands.
#[derive(Debug, Args)]
pub struct RunOptions {
    /// Experiment configuration (JSON); omitted fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Force channel the summary is computed from.
    #[arg(long, value_enum)]
    pub channel: Option<Channel>,
    /// Skip frame rendering and contour analysis.
    #[arg(long)]
    pub no_vision: bool,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Preset name, or a JSON file holding a contact law or a preset.
    #[arg(long)]
    pub tissue: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunOptions,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, default_value = "ecoflex10")]
    pub a: String,
    #[arg(long, default_value = "ecoflex30")]
    pub b: String,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub run: RunOptions,
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Render, augment and split a dataset into a directory.
    Build(DatasetBuildArgs),
}

#[derive(Debug, Args)]
pub struct DatasetBuildArgs {
    /// Base frames.
    #[arg(long, default_value_t = 1500)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset configuration (JSON); `--n` and `--seed` override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// pgm or png.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum RegressorCommand {
    /// Fit on the training split and report validation and test error.
    Train(RegressorTrainArgs),
    /// Score a saved regressor on a dataset's test split.
    Eval(RegressorEvalArgs),
}

#[derive(Debug, Args)]
pub struct RegressorTrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
}

#[derive(Debug, Args)]
pub struct RegressorEvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum VisionCommand {
    /// Classification and regression report.
    Eval(VisionEvalArgs),
}

#[derive(Debug, Args)]
pub struct VisionEvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Saved regressor; fitted on the training split when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Evaluate on this many augmented class-midpoint frames per class
    /// instead of the test split.
    #[arg(long)]
    pub midpoints: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub addr: Option<SocketAddr>,
    #[arg(long)]
    pub tissue: Option<String>,
    /// Wall seconds per simulated second.
    #[arg(long)]
    pub time_scale: Option<f64>,
}
