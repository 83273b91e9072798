use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use volfied_core::broker::Strategy;
use volfied_core::sim::PoaLayout;
use volfied_core::DistanceMetric;

#[derive(Debug, Parser)]
#[command(name = "volfied", version, about = "Targeted ad scheduling for vehicular networks: scenario generation, simulation and exact small-instance optimum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an ad catalog (ads.csv).
    GenAds(GenArgs),
    /// Generate PoA positions (poas.csv).
    GenPoas(GenArgs),
    /// Generate a random-waypoint mobility trace (trace.csv).
    GenTrace(GenArgs),
    /// Generate vehicle interest profiles (profiles.csv).
    GenProfiles(GenArgs),
    /// Reduce an ad catalog to its sparse approximation (sparse_ads.csv, mapping.csv).
    Sparsify(SparsifyArgs),
    /// Simulate strategies over seeds, optionally sweeping one parameter.
    Run(RunArgs),
    /// Like `run`, but a sweep is required.
    Sweep(RunArgs),
    /// Solve a single-step instance exactly (oracle.json).
    Oracle(OracleArgs),
    /// Print the resolved configuration as JSON.
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON configuration; every field is required. Built-in defaults otherwise.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Per-parameter overrides applied on top of the configuration.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long = "d-max")]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Feature-space dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// euclidean or angular. Angular without --d-max uses the calibrated threshold.
    #[arg(long)]
    pub metric: Option<DistanceMetric>,
    /// Vehicle cache capacity C.
    #[arg(long)]
    pub cache: Option<usize>,
    /// Detection accuracy p in [0, 1].
    #[arg(long)]
    pub detection: Option<f64>,
    #[arg(long = "num-ads")]
    pub num_ads: Option<usize>,
    #[arg(long = "global-fraction")]
    pub global_fraction: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long = "num-vehicles")]
    pub num_vehicles: Option<usize>,
    #[arg(long = "num-poas")]
    pub num_poas: Option<usize>,
    /// grid or uniform.
    #[arg(long = "poa-layout", value_parser = parse_layout)]
    pub poa_layout: Option<PoaLayout>,
    /// Let Volfied rank the full catalog instead of the sparse approximation.
    #[arg(long = "no-sparse")]
    pub no_sparse: bool,
}

fn parse_layout(s: &str) -> Result<PoaLayout, String> {
    match s {
        "grid" => Ok(PoaLayout::Grid),
        "uniform" => Ok(PoaLayout::Uniform),
        other => Err(format!("unknown PoA layout `{other}` (expected grid or uniform)")),
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Existing PoA file used for local ad targets (gen-ads only).
    #[arg(long, value_name = "PATH")]
    pub poas: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SparsifyArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Ad catalog to reduce.
    #[arg(long, value_name = "PATH")]
    pub ads: PathBuf,
    /// Reduce the ads valued at this PoA; global ads only when omitted.
    #[arg(long)]
    pub poa: Option<u32>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Strategies, comma separated: volfied, topk, random.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Vec<Strategy>,
    /// One parameter and its values, e.g. `k=1,2,4`. Parameters: k, m,
    /// num_ads, epsilon, d_max, cache, detection.
    #[arg(long, value_name = "PARAM=V1,V2,...")]
    pub sweep: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub ads: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub poas: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub profiles: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Instance file (JSON with params, ads, vehicles, coverage).
    #[arg(long, value_name = "PATH")]
    pub instance: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
