use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use pml_lfc::similarity::{KernelWidthMode, SimilarityMode};

use crate::protocol::Variant;

pub const THREADS_ENV: &str = "PML_LFC_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "pml-lfc",
    version,
    about = "Train and evaluate partial multi-label classifiers",
    disable_help_flag = true,
    disable_version_flag = true
)]
pub struct Cli {
    /// Worker threads for bench, sweep and ablate (0 = one per core).
    #[arg(long, env = THREADS_ENV, default_value_t = 0, global = true)]
    pub threads: usize,

    #[arg(long, action = ArgAction::Help, global = true)]
    help: Option<bool>,

    #[arg(long, action = ArgAction::Version)]
    version: Option<bool>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it with its objective trace.
    #[command(disable_help_flag = true)]
    Train(TrainArgs),
    /// Score new instances with a saved model.
    #[command(disable_help_flag = true)]
    Predict(PredictArgs),
    /// Score a labelled test set and print all five metrics.
    #[command(disable_help_flag = true)]
    Evaluate(EvaluateArgs),
    /// Write a noisy dataset: planted, or noise injected into given truth.
    #[command(disable_help_flag = true)]
    Synth(SynthArgs),
    /// Noise-ratio grid × repeats under the 80/20 protocol.
    #[command(disable_help_flag = true)]
    Bench(BenchArgs),
    /// Sensitivity to alpha or beta with the other fixed at 10.
    #[command(disable_help_flag = true)]
    Sweep(SweepArgs),
    /// Compare the both / feature_only / label_only / two_stage variants.
    #[command(disable_help_flag = true)]
    Ablate(AblateArgs),
}

/// Training settings: defaults, then `--config`, then `--set`, then the typed flags.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. `--set agd.max_iterations=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub outer_iterations: Option<usize>,
    #[arg(long)]
    pub similarity_mode: Option<SimilarityMode>,
    #[arg(long)]
    pub kernel_width_mode: Option<KernelWidthMode>,
    /// Estimate P first, then fit W once.
    #[arg(long)]
    pub two_stage: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Candidate labels in the sparse `i: c1 c2` format.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out_model: PathBuf,
    /// Objective trace CSV [default: <out-model>.trace.csv].
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Dense score matrix output.
    #[arg(long)]
    pub out_scores: PathBuf,
    /// Binarized labels in the sparse label format.
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
    /// Binarization threshold in (0, 1) [default: 1/q].
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    /// Ground-truth labels of the evaluated instances.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving features.txt, labels.txt and truth.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Existing features; requires --truth. Without both, a planted dataset is generated.
    #[arg(long, requires = "truth")]
    pub features: Option<PathBuf>,
    #[arg(long, requires = "features")]
    pub truth: Option<PathBuf>,
    /// Irrelevant labels added per instance, as a percentage of its true labels.
    #[arg(long, default_value_t = 100.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub d: usize,
    #[arg(long, default_value_t = 8)]
    pub q: usize,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, default_value_t = 1)]
    pub min_labels: usize,
    #[arg(long, default_value_t = 3)]
    pub max_labels: usize,
}

/// Dataset, repeats and output shared by the protocol commands.
#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Ground-truth labels; noise is injected per repeat.
    #[arg(long)]
    pub truth: PathBuf,
    /// Dataset name in reports [default: features file stem].
    #[arg(long)]
    pub name: Option<String>,
    /// Base seed; repeat r uses seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::protocol::DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    /// Per-run CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Aggregate CSV [default: <out stem>.summary.csv].
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Noise ratios in percent.
    #[arg(long, value_delimiter = ',', default_values_t = crate::protocol::DEFAULT_NOISE_GRID)]
    pub noise_grid: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [Variant::Both])]
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Alpha,
    Beta,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long, value_delimiter = ',', default_values_t = crate::protocol::DEFAULT_SWEEP_GRID)]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 100.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
}
