use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gam_sparsify::dataset::Delimiter;
use gam_sparsify::Family;

mod commands;

/// Fit an additive model, then prune and reweight its terms with the LASSO.
#[derive(Debug, Parser)]
#[command(name = "gam-sparsify", version)]
struct Cli {
    /// Log progress (repeat for more detail). RUST_LOG overrides this.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model on the training rows; writes model.json and training_log.csv.
    Train(TrainCmd),
    /// Reweight a model's terms; writes reduced_model.json, path_report.csv
    /// and plot data. Trains first when --model is not given.
    Postprocess(PostprocessCmd),
    /// Print metrics of one or more models as text and CSV.
    Evaluate(EvaluateCmd),
    /// Print mean absolute term contributions.
    Report(ReportCmd),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Response column.
    #[arg(long)]
    target: String,
    /// Boolean column marking test rows (true/1 = test).
    #[arg(long, conflicts_with = "split_fraction")]
    test_indicator: Option<String>,
    /// Fraction of rows drawn at random (seeded) as the test set.
    #[arg(long)]
    split_fraction: Option<f64>,
    /// Field separator: a single character, `comma`, `tab`, `semicolon` or `ws`.
    #[arg(long, default_value = "comma")]
    delimiter: Delimiter,
    /// Missing-value token; repeatable. Defaults to the empty string and NA.
    #[arg(long = "missing")]
    missing: Vec<String>,
    /// Seed for every random choice (split, bags).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, default_value = "gaussian")]
    family: Family,
    #[arg(long, default_value_t = 8)]
    outer_bags: usize,
    /// Number of pairwise interaction terms.
    #[arg(long, default_value_t = 10)]
    interactions: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 5000)]
    max_rounds: usize,
    #[arg(long, default_value_t = 50)]
    early_stop_patience: usize,
    #[arg(long, default_value_t = 0.15)]
    validation_fraction: f64,
    #[arg(long, default_value_t = 256)]
    max_bins: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InterceptArg {
    Reestimate,
    Offset,
}

#[derive(Debug, Args)]
struct LassoArgs {
    /// Constrain term weights to be non-negative (default).
    #[arg(long, overrides_with = "no_positive")]
    positive: bool,
    /// Allow negative term weights.
    #[arg(long, overrides_with = "positive")]
    no_positive: bool,
    /// Penalize standardized contributions.
    #[arg(long)]
    standardize: bool,
    #[arg(long, default_value_t = 100)]
    n_lambda: usize,
    /// Smallest lambda as a fraction of the largest.
    #[arg(long)]
    lambda_min_ratio: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Re-estimate the intercept, or keep the model's as a fixed offset.
    #[arg(long, value_enum, default_value = "reestimate")]
    intercept: InterceptArg,
}

#[derive(Debug, Args)]
struct TrainCmd {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct PostprocessCmd {
    #[command(flatten)]
    data: DataArgs,
    /// Fitted model; omitted = train one first with the training flags.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
    #[command(flatten)]
    lasso: LassoArgs,
    /// Separate labelled CSV used only for final validation.
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateCmd {
    #[command(flatten)]
    data: DataArgs,
    /// Model file; repeat to compare several on the same rows.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    /// Count positives among the k highest scores (classification).
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportCmd {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Also write importances.csv here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("GAM_SPARSIFY_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            anyhow::anyhow!("GAM_SPARSIFY_THREADS must be a positive integer, got `{v}`")
        })?;
        if n == 0 {
            anyhow::bail!("GAM_SPARSIFY_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let run = || -> anyhow::Result<()> {
        init_threads()?;
        match cli.command {
            Command::Train(c) => commands::train(&c),
            Command::Postprocess(c) => commands::postprocess(&c),
            Command::Evaluate(c) => commands::evaluate(&c),
            Command::Report(c) => commands::report(&c),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
