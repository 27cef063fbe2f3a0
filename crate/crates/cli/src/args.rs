//! Command-line surface (clap derive). Parse failures exit with code 2;
//! failed subtasks exit with code 1 (see `main.rs`).

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "chaoscast",
    version,
    about = "Forecasting benchmark on chaotic systems: generate data, tune methods, evaluate, report",
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run manifest (JSON); missing fields use built-in defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,

    /// Data tree root (precedence: this flag, then $CHAOSCAST_DATA, then the
    /// manifest, then "data")
    #[arg(long, global = true, env = "CHAOSCAST_DATA", value_name = "DIR")]
    pub data_root: Option<PathBuf>,

    /// Master seed overriding the manifest
    #[arg(long, global = true, value_name = "SEED")]
    pub seed: Option<u64>,

    /// Cap on worker threads for parallel evaluation
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the benchmark data tree (train/truth CSVs plus metadata)
    Generate(GenerateArgs),
    /// Pick hyperparameters by local grid search on the validation split
    Tune(TuneArgs),
    /// Score tuned methods on the test split and write results.csv
    Run(RunArgs),
    /// Aggregate results into rank, confidence, significance, and plot tables
    Report,
    /// Sensitivity study: perturb the standard system and track the error
    Perturb(PerturbArgs),
    /// Score an externally produced forecast CSV against a truth CSV
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Restrict to these systems (repeatable or comma-separated)
    #[arg(long = "system", value_name = "NAME", value_delimiter = ',')]
    pub systems: Vec<String>,

    /// Restrict to these observation schemes
    #[arg(long = "scheme", value_name = "NAME", value_delimiter = ',')]
    pub schemes: Vec<String>,

    /// Validation repetitions per (system, scheme), overriding the manifest
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub validation_reps: Option<u64>,

    /// Test repetitions per (system, scheme), overriding the manifest
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub test_reps: Option<u64>,

    /// Overwrite repetition directories that already hold data
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Restrict to these methods (repeatable or comma-separated)
    #[arg(long = "method", value_name = "NAME", value_delimiter = ',')]
    pub methods: Vec<String>,

    #[arg(long = "system", value_name = "NAME", value_delimiter = ',')]
    pub systems: Vec<String>,

    #[arg(long = "scheme", value_name = "NAME", value_delimiter = ',')]
    pub schemes: Vec<String>,

    /// Evaluation budget per (method, system, scheme)
    #[arg(long, value_name = "N", default_value_t = chaoscast_core::tuner::DEFAULT_MAX_EVALS)]
    pub max_evals: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Restrict to these methods (repeatable or comma-separated)
    #[arg(long = "method", value_name = "NAME", value_delimiter = ',')]
    pub methods: Vec<String>,

    #[arg(long = "system", value_name = "NAME", value_delimiter = ',')]
    pub systems: Vec<String>,

    #[arg(long = "scheme", value_name = "NAME", value_delimiter = ',')]
    pub schemes: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PerturbTarget {
    /// Perturb the initial state
    State,
    /// Perturb the system parameters
    Params,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// What to perturb
    #[arg(long, value_enum, default_value_t = PerturbTarget::State)]
    pub target: PerturbTarget,

    /// Perturbation radii (comma-separated)
    #[arg(
        long,
        value_name = "R",
        value_delimiter = ',',
        default_values_t = [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 100.0]
    )]
    pub radii: Vec<f64>,

    /// Repetitions per radius
    #[arg(long, value_name = "N", default_value_t = 100)]
    pub reps: usize,

    /// Write the table here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("window").required(true).args(["meta", "origin_time"])))]
pub struct MetricsArgs {
    /// Forecast CSV; must carry the same `time` column as the truth file
    /// (empty or non-finite coordinates mark a row as a missing forecast)
    #[arg(long, value_name = "FILE")]
    pub prediction: PathBuf,

    /// Ground-truth CSV (`time,u1,...,uD`)
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,

    /// meta.json fixing the scoring window (origin time and horizon)
    #[arg(long, value_name = "FILE", conflicts_with_all = ["origin_time", "horizon"])]
    pub meta: Option<PathBuf>,

    /// Forecast origin time of the scoring window
    #[arg(long, value_name = "T")]
    pub origin_time: Option<f64>,

    /// Window length (default: last truth time minus the origin)
    #[arg(long, value_name = "T", requires = "origin_time")]
    pub horizon: Option<f64>,

    /// Valid-time threshold on the normalized error
    #[arg(long, value_name = "K", default_value_t = 0.4)]
    pub kappa: f64,
}
