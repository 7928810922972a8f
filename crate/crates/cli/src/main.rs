//! `tailmc`: command-line front end for Monte Carlo tail exponent estimation.

mod commands;
mod error;
mod hist;
mod ingest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tailmc::TailMode;

use crate::error::CliError;
use crate::ingest::InputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "tailmc",
    version,
    about = "Monte Carlo tail exponent estimation for heavy-tailed data"
)]
struct Cli {
    /// Worker threads for simulations (default: all cores). Results do not
    /// depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build or inspect the expected-Hill grid cache.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Estimate the tail exponent of a series against a grid.
    Estimate(EstimateArgs),
    /// Write the Hill curve of a series as CSV.
    HillPlot(HillPlotArgs),
    /// Run a seeded finite-sample study.
    #[command(subcommand)]
    Study(StudyCommand),
    /// Histogram of standardized returns with a standard normal overlay.
    Hist(HistArgs),
    /// Write a synthetic price series driven by symmetric stable returns.
    SynthPrices(SynthArgs),
}

#[derive(Debug, Subcommand)]
enum GridCommand {
    /// Simulate a grid and write it to a cache file.
    Simulate(GridSimulateArgs),
    /// Print the header of a grid cache file.
    Info {
        #[arg(long)]
        grid: PathBuf,
    },
}

#[derive(Debug, Args)]
struct GridSimulateArgs {
    /// Series length; must equal the length of the data it will be used on.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1.01)]
    alpha_min: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 0.01)]
    alpha_step: f64,
    #[arg(long, default_value_t = 0.01)]
    k_lo: f64,
    #[arg(long, default_value_t = 0.20)]
    k_hi: f64,
    #[arg(long, value_parser = parse_tail_mode, default_value = "upper")]
    tail_mode: TailMode,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "prices")]
    format: InputFormat,
    /// Value column (default: close/price or return, else the last column).
    #[arg(long)]
    column: Option<String>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    grid: PathBuf,
    /// Split the series into this many equal consecutive periods.
    #[arg(long, default_value_t = 1)]
    split: usize,
    #[arg(long, default_value_t = tailmc::estimator::DEFAULT_CI_REPLICATIONS)]
    ci_reps: usize,
    #[arg(long, default_value_t = 1)]
    ci_seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = tailmc::estimator::DEFAULT_LEVELS)]
    levels: Vec<f64>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HillPlotArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.01)]
    k_lo: f64,
    #[arg(long, default_value_t = 0.20)]
    k_hi: f64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_parser = parse_tail_mode)]
    tail_mode: Option<TailMode>,
    /// Grid whose rows are added as overlay columns; its k-grid and tail
    /// mode replace --k-lo/--k-hi/--tail-mode.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Grid exponents to overlay.
    #[arg(long, value_delimiter = ',', requires = "grid")]
    overlay: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StudyOutput {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for the CSV tables and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Record the generation time in the manifest (breaks byte-identical reruns).
    #[arg(long)]
    stamp: bool,
}

#[derive(Debug, Subcommand)]
enum StudyCommand {
    /// Optimal k in (1%, 20%] per sample length and exponent.
    OptimalK {
        #[arg(long, value_delimiter = ',', default_values_t = tailmc::experiments::DESK_LENGTHS)]
        lengths: Vec<usize>,
        /// Also run lengths 10^5 and 10^6.
        #[arg(long)]
        long_run: bool,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = tailmc::experiments::DEFAULT_STUDY_REPLICATIONS)]
        reps: usize,
        #[arg(long, value_parser = parse_tail_mode, default_value = "upper")]
        tail_mode: TailMode,
        #[command(flatten)]
        output: StudyOutput,
    },
    /// Longest k-range within 5% of alpha for k <= 1%.
    SmallK {
        #[arg(long, default_value_t = 10_000)]
        length: usize,
        /// Use length 10^6.
        #[arg(long)]
        long_run: bool,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = tailmc::experiments::DEFAULT_STUDY_REPLICATIONS)]
        reps: usize,
        #[arg(long, value_parser = parse_tail_mode, default_value = "upper")]
        tail_mode: TailMode,
        #[command(flatten)]
        output: StudyOutput,
    },
    /// Simulated quantiles of the Monte Carlo estimator.
    Quantiles {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = tailmc::estimator::DEFAULT_CI_REPLICATIONS)]
        reps: usize,
        #[command(flatten)]
        output: StudyOutput,
    },
}

#[derive(Debug, Args)]
struct HistArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1.7)]
    alpha: f64,
    /// Number of price rows (returns = rows - 1).
    #[arg(long, default_value_t = 2001)]
    rows: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplier applied to the stable draws to form log returns.
    #[arg(long, default_value_t = 0.01)]
    scale: f64,
    #[arg(long, default_value_t = 1000.0)]
    start: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_tail_mode(s: &str) -> Result<TailMode, String> {
    s.parse().map_err(|e: tailmc::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Grid(GridCommand::Simulate(a)) => commands::grid_simulate(a),
        Command::Grid(GridCommand::Info { grid }) => commands::grid_info(&grid),
        Command::Estimate(a) => commands::estimate(a),
        Command::HillPlot(a) => commands::hill_plot(a),
        Command::Study(s) => commands::study(s),
        Command::Hist(a) => commands::hist(a),
        Command::SynthPrices(a) => commands::synth_prices(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
