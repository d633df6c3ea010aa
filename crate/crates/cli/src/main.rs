use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Neural and maximum-likelihood estimation of GEV parameters.
#[derive(Parser, Debug)]
#[command(name = "gevnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a GEV sample and write one value per line.
    Simulate(SimulateArgs),
    /// Simulate a training/validation dataset and write it as CSV.
    BuildDataset(DatasetArgs),
    /// Train a network and write the model and per-epoch history.
    Train(TrainArgs),
    /// Estimate GEV parameters of a values file with a trained model.
    Estimate(EstimateArgs),
    /// Fit every site of a site_id,year,value table.
    Fit(FitArgs),
    /// Parametric-bootstrap intervals for a values file.
    Bootstrap(BootstrapArgs),
    /// Run a simulation study and write its report tables.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, allow_hyphen_values = true)]
    xi: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ScenarioArg {
    Fixed,
    Varying,
}

#[derive(Args, Debug, Clone)]
struct DatasetFlags {
    #[arg(long, value_enum, default_value_t = ScenarioArg::Fixed)]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 30_000)]
    n_train: usize,
    #[arg(long, default_value_t = 4_000)]
    n_valid: usize,
    /// Sample size for the fixed scenario.
    #[arg(long, default_value_t = 1000)]
    sample_size: usize,
    /// Sample sizes for the varying scenario.
    #[arg(long, value_delimiter = ',', default_values_t = gevnet::training::DEFAULT_VARYING_SIZES)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DatasetArgs {
    #[command(flatten)]
    dataset: DatasetFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PenaltyArg {
    Hinge,
    Indicator,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Read records from a dataset CSV instead of simulating them.
    #[arg(long)]
    dataset_file: Option<PathBuf>,
    #[command(flatten)]
    dataset: DatasetFlags,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 150)]
    max_epochs: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = PenaltyArg::Hinge)]
    penalty: PenaltyArg,
    #[arg(long, value_delimiter = ',', default_values_t = gevnet::nn::DEFAULT_HIDDEN)]
    hidden: Vec<usize>,
    /// Seed for weight initialization and shuffling.
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    #[arg(long)]
    model_out: PathBuf,
    /// Defaults to the model path with a `.history.csv` suffix.
    #[arg(long)]
    history_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Nn,
    Mle,
    Both,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
    /// Bootstrap replicates for network intervals (0 disables).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra likelihood fits from jittered starting points.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 900)]
    b: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the replicate matrix here.
    #[arg(long)]
    replicates_out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Study {
    Deviations,
    Grid,
    Ratios,
    Timing,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    study: Study,
    /// Test cases for the deviation, ratio and timing studies.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [72, 416, 1000])]
    sizes: Vec<usize>,
    /// Grid points along each of σ and ξ.
    #[arg(long, default_value_t = 20)]
    grid_points: usize,
    #[arg(long, default_value_t = 100)]
    replications: usize,
    /// Bootstrap replicates for the ratio study.
    #[arg(long, default_value_t = 300)]
    b: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
