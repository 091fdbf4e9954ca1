use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "randual", version, about = "Randomized channel-state duality experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CPTP residuals, Kraus rank and Choi spectrum of a channel file.
    ChannelInspect(InspectArgs),
    /// Estimate tr[X(A)B] from random dual states.
    Estimate(EstimateArgs),
    /// Estimator distance to the exact dual across ensemble sizes.
    DualDistance(DistanceArgs),
    /// Pair estimator of the averaged OTOC.
    Otoc(OtocArgs),
    /// Single-spin relaxation in the mixed-field Ising chain.
    Thermalize(ThermalizeArgs),
    /// Estimator distance scaling for the Ising chain channel.
    Scaling(ScalingArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Directory for data files and manifest.json.
    #[arg(long, default_value = "randual-out")]
    pub output_dir: PathBuf,
    /// Lift the size caps (12 spins, unitary dimension 8192).
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Channel JSON file.
    pub spec: PathBuf,
    /// Also write inspect.json and a manifest here.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Input-side observable JSON.
    #[arg(long = "observable-a")]
    pub observable_a: PathBuf,
    /// Output-side observable JSON.
    #[arg(long = "observable-b")]
    pub observable_b: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Comma-separated ensemble sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,50,100,500")]
    pub n_values: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct OtocArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long = "observable-a")]
    pub observable_a: PathBuf,
    /// Must be a diagonal rank-1 projector.
    #[arg(long = "observable-b")]
    pub observable_b: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the all-pairs mean (no spread is given for it).
    #[arg(long)]
    pub all_pairs: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ThermalizeArgs {
    /// JSON file with any of the fields below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    /// Initial polarization: z or y.
    #[arg(long)]
    pub pol: Option<String>,
    /// Pauli measured on the first spin (defaults to the polarization axis).
    #[arg(long)]
    pub observable: Option<String>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Explicit comma-separated times; overrides --t-max/--dt.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Input spins (first n_a); defaults to n.
    #[arg(long)]
    pub na: Option<usize>,
    /// Output spins (first n_b).
    #[arg(long)]
    pub nb: Option<usize>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}
