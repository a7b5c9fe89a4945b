//! Command-line front end: `train`, `generate`, `cdf`, `evaluate`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use distvae::data::{load_csv, standardize, trim_to_quantiles, write_csv};
use distvae::metrics::{evaluate, EvalOptions, MiaConfig};
use distvae::model::train_with_progress;
use distvae::synthesis::{estimate_cdf, generate_with, ordinal_cdf, OrdinalRounding};
use distvae::{Checkpoint, ColumnKind, Error, Result, Schema, TrainConfig};

#[derive(Parser)]
#[command(name = "distvae", version, about = "Train, sample and evaluate quantile-spline VAE synthesizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV table and write a checkpoint.
    Train(TrainArgs),
    /// Sample synthetic rows from a checkpoint.
    Generate(GenerateArgs),
    /// Export the estimated CDF of one continuous or ordinal column.
    Cdf(CdfArgs),
    /// Score a synthetic table against real train/test tables.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// TOML file overriding any subset of the training defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    knots: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Drop training rows outside the 1%-99% range of any continuous column.
    #[arg(long)]
    trim_outliers: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Round ordinal columns to one decimal instead of the nearest observed level.
    #[arg(long)]
    first_decimal: bool,
}

#[derive(Args)]
struct CdfArgs {
    #[arg(long)]
    model: PathBuf,
    /// Column name or zero-based index.
    #[arg(long)]
    column: String,
    /// Monte Carlo prior draws.
    #[arg(long, default_value_t = 5000)]
    mc: usize,
    /// Grid size over the column's 1%-99% training range.
    #[arg(long, default_value_t = 201)]
    grid_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ordinal columns: evaluate at the observed levels instead of a grid.
    #[arg(long)]
    discretize: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    real_train: PathBuf,
    #[arg(long)]
    real_test: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    regression_target: String,
    #[arg(long)]
    classification_target: String,
    /// Run the shadow-model membership inference attack (needs --model).
    #[arg(long, requires = "model")]
    with_mia: bool,
    /// Checkpoint that produced --synth.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated attacker-known columns (default: all continuous).
    #[arg(long, value_delimiter = ',')]
    known: Option<Vec<String>>,
    /// Comma-separated secret columns (default: all discrete).
    #[arg(long, value_delimiter = ',')]
    secret: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn column_index(schema: &Schema, key: &str) -> Result<usize> {
    schema
        .index_of(key)
        .or_else(|| key.parse().ok().filter(|&i: &usize| i < schema.len()))
        .ok_or_else(|| Error::InvalidArgument(format!("no column {key:?}")))
}

fn run_train(a: TrainArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?
        }
        None => TrainConfig::default(),
    };
    config.seed = a.seed;
    config.epochs = a.epochs.unwrap_or(config.epochs);
    config.batch_size = a.batch_size.unwrap_or(config.batch_size);
    config.learning_rate = a.lr.unwrap_or(config.learning_rate);
    config.beta = a.beta.unwrap_or(config.beta);
    config.latent_dim = a.latent_dim.unwrap_or(config.latent_dim);
    config.knots = a.knots.unwrap_or(config.knots);
    config.hidden_width = a.hidden.unwrap_or(config.hidden_width);

    let schema = Schema::load(&a.schema)?;
    let mut raw = load_csv(&a.data, &schema)?;
    if a.trim_outliers {
        raw = trim_to_quantiles(&raw, 0.01, 0.99)?;
    }
    let (scaled, _) = standardize(&raw)?;
    let ckpt = train_with_progress(&scaled, &config, |epoch, loss| {
        println!(
            "epoch {:>4}  total {:.6}  crps {:.6}  discrete {:.6}  kl {:.6}",
            epoch + 1,
            loss.total,
            loss.crps_recon,
            loss.discrete_recon,
            loss.kl
        );
    })?;
    ckpt.save(&a.out)
}

fn run_generate(a: GenerateArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.model)?;
    let rounding = if a.first_decimal {
        OrdinalRounding::FirstDecimal
    } else {
        OrdinalRounding::NearestLevel
    };
    let table = generate_with(&ckpt, a.n, a.seed, rounding)?;
    write_csv(&table, output(a.out.as_deref())?)
}

fn run_cdf(a: CdfArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.model)?;
    let column = column_index(ckpt.schema(), &a.column)?;
    let spec = &ckpt.schema().columns[column];
    let out = output(a.out.as_deref())?;
    if a.discretize {
        if spec.kind != ColumnKind::Ordinal {
            return Err(Error::InvalidArgument(format!("--discretize needs an ordinal column, {} is not", spec.name)));
        }
        return ordinal_cdf(&ckpt, column, a.mc, a.seed)?.write_csv(out);
    }
    let info = ckpt
        .column_info(column)
        .ok_or_else(|| Error::InvalidArgument(format!("column {} is discrete; no CDF", spec.name)))?;
    if a.grid_points < 2 {
        return Err(Error::InvalidArgument("--grid-points must be at least 2".into()));
    }
    let scale = ckpt.scaling.for_column(column).expect("numeric column has scaling");
    let (lo, hi) = (info.q01, info.q99);
    let grid: Vec<f64> = (0..a.grid_points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (a.grid_points - 1) as f64;
            x * scale.stddev + scale.mean
        })
        .collect();
    estimate_cdf(&ckpt, column, &grid, a.mc, a.seed)?.write_csv(out)
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let schema = Schema::load(&a.schema)?;
    let real_train = load_csv(&a.real_train, &schema)?;
    let real_test = load_csv(&a.real_test, &schema)?;
    let synth = load_csv(&a.synth, &schema)?;
    let columns = |keys: &Option<Vec<String>>| -> Result<Option<Vec<usize>>> {
        keys.as_ref()
            .map(|ks| ks.iter().map(|k| column_index(&schema, k)).collect())
            .transpose()
    };
    let mut opts = EvalOptions::new(
        column_index(&schema, &a.regression_target)?,
        column_index(&schema, &a.classification_target)?,
    );
    opts.known = columns(&a.known)?;
    opts.secret = columns(&a.secret)?;
    let target = match (&a.model, a.with_mia) {
        (Some(p), true) => Some(Checkpoint::load(p)?),
        _ => None,
    };
    if let Some(ckpt) = &target {
        opts.membership = Some((
            ckpt,
            MiaConfig {
                class_column: opts.classification_target,
                train_config: ckpt.config,
                seed: a.seed,
            },
        ));
    }
    let report = evaluate(&real_train, &real_test, &synth, &opts)?;
    let mut out = output(a.out.as_deref())?;
    let dest = a.out.unwrap_or_else(|| PathBuf::from("<stdout>"));
    out.write_all(report.to_json().as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&dest, e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => run_train(a),
        Command::Generate(a) => run_generate(a),
        Command::Cdf(a) => run_cdf(a),
        Command::Evaluate(a) => run_evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
