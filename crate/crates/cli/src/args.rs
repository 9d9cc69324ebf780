use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "epinode",
    version,
    about = "Decomposition-driven hybrid epidemic forecasting",
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Random seed (model initialization, generator noise, benchmark seed offset).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file, or output directory for commands that write several files.
    /// Defaults to $EPINODE_OUT_DIR (or the current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Replace existing output files.
    #[arg(long, global = true)]
    pub overwrite: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic epidemic and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Split a CSV column into trend, seasonal and residual parts.
    Decompose(DecomposeArgs),
    /// Fit the model and save a run artifact.
    Train(TrainArgs),
    /// Write forecast and rate trajectories from a saved run.
    Forecast(ForecastArgs),
    /// Score variants over a grid of splits and seeds.
    Evaluate(EvaluateArgs),
    /// Run the latent-variant / delay / component / method ablation cross.
    Ablate(AblateArgs),
    /// Render CSV columns as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// sirs_fixed, sirs_varying, sir or seirs.
    #[arg(long, default_value = "sirs_fixed")]
    pub kind: String,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Log-normal observation noise on I.
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Input CSV with a header row.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "I")]
    pub column: String,
    /// Number of VMD modes.
    #[arg(long)]
    pub k: Option<usize>,
    /// Components to keep (1 to 3).
    #[arg(long)]
    pub components: Option<usize>,
    /// vmd, ma or stl.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct DatasetArgs {
    /// A synthetic kind (sirs_fixed, sirs_varying, sir, seirs) or a CSV path.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Value column for CSV datasets.
    #[arg(long)]
    pub column: Option<String>,
    /// Time column for CSV datasets.
    #[arg(long)]
    pub time_column: Option<String>,
    /// Population scale for CSV datasets; defaults to 1.25 times the maximum.
    #[arg(long)]
    pub scale: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Decomposition components feeding the model (1 to 3).
    #[arg(long)]
    pub components: Option<usize>,
    /// 3ode (one flow per component) or 1ode (one shared flow).
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub no_delay: bool,
    /// vmd, ma or stl.
    #[arg(long)]
    pub method: Option<String>,
    /// causal or paper-faithful (decomposes the full series; flagged as leaked).
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fraction of the series used for training.
    #[arg(long)]
    pub split: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Run artifact written by `train`.
    #[arg(long)]
    pub run: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub splits: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Any of epinode, 1ode, oracle.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Any of 1ode, 3ode.
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    /// Any of on, off.
    #[arg(long, value_delimiter = ',')]
    pub delays: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub components: Option<Vec<usize>>,
    /// Any of vmd, ma, stl.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Columns to draw; defaults to every numeric column except the x column.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Column holding the time axis; defaults to the first column.
    #[arg(long)]
    pub x: Option<String>,
    /// Draw the train/forecast boundary at this fraction of the time axis.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long, default_value = "")]
    pub title: String,
}
