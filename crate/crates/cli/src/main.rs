//! `sfm`: train, apply and evaluate structural factorization machines.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Exit status for data, validation and I/O failures.
const EXIT_DATA: u8 = 3;
/// Exit status when training diverges or produces non-finite values.
const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sfm",
    version,
    about = "Structural factorization machines over relational block data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model with Adam, keeping the epoch with the best validation MSE
    Train(TrainArgs),
    /// Score every sample of a dataset, one prediction per line
    Predict(PredictArgs),
    /// Print the mean squared error of predictions against labels
    Eval(EvalArgs),
    /// Generate a synthetic dataset from a random planted model
    Gen(GenArgs),
    /// Print storage statistics of a dataset
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct TrainArgs {
    /// Training dataset (directory or manifest.txt)
    #[arg(long)]
    train: PathBuf,
    /// Validation dataset used for early stopping
    #[arg(long)]
    val: PathBuf,
    /// Output model file
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch log file: `epoch train_risk val_mse`
    #[arg(long)]
    log: Option<PathBuf>,
    /// Latent rank R
    #[arg(long, default_value_t = 20)]
    rank: usize,
    /// Adam learning rate
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Weight of the squared Frobenius regularizer
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, default_value_t = 400)]
    max_epochs: usize,
    /// Epochs without validation improvement before stopping
    #[arg(long, default_value_t = 20)]
    patience: usize,
    /// Scale of the variance-scaling initializer
    #[arg(long, default_value_t = 2.0)]
    init_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per update; 0 trains on the full batch
    #[arg(long, default_value_t = 0)]
    batch_size: usize,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model file written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Dataset to score
    #[arg(long)]
    data: PathBuf,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("truth").required(true).args(["labels", "data"]))]
struct EvalArgs {
    /// One prediction per line
    #[arg(long)]
    predictions: PathBuf,
    /// One label per line
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Dataset whose labels to compare against
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group = clap::ArgGroup::new("layout").required(true).args(["schema", "mode_dims"]))]
struct GenArgs {
    /// Schema file in the dataset format
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Feature dimension of each mode, comma separated
    #[arg(long, value_delimiter = ',', requires = "views")]
    mode_dims: Option<Vec<usize>>,
    /// Modes of one view, comma separated; repeat once per view
    #[arg(long = "view", id = "views")]
    views: Vec<String>,
    /// Number of samples
    #[arg(long)]
    n: usize,
    /// Distinct columns per mode: one value for all modes or one per mode
    #[arg(long, value_delimiter = ',', required = true)]
    distinct: Vec<usize>,
    /// Rank of the planted model
    #[arg(long, default_value_t = 5)]
    rank: usize,
    /// Standard deviation of the Gaussian label noise
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Non-zeros per block column
    #[arg(long, default_value_t = 5)]
    nnz: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; gets train/, val/ and test/ when a split is requested
    #[arg(long)]
    out: PathBuf,
    /// Also save the planted model here
    #[arg(long)]
    truth_model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    val_frac: f64,
    #[arg(long, default_value_t = 0.0)]
    test_frac: f64,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Dataset directory or manifest.txt
    #[arg(long)]
    data: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gen(a) => commands::gen(a),
        Command::Stats(a) => commands::stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_DATA })
        }
    }
}
