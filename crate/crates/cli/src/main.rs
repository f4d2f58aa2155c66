mod data;
mod explain;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use refxplain::evaluation::{run_benchmark, BenchmarkConfig, Method};
use refxplain::network::{r_squared, train, DenseNetwork, NetFile};
use refxplain::seed;
use refxplain::selfcheck::{run_selfcheck, SelfcheckOptions};

use data::{sidecar_path, DataArgs, TrainSummary};

/// Explain regression networks relative to a reference value.
#[derive(Parser)]
#[command(name = "refxplain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a one-hidden-layer ReLU network on a dataset
    Train(TrainArgs),
    /// Explain one prediction
    Explain(explain::ExplainArgs),
    /// Score the reference-value strategies against a Shapley oracle
    Benchmark(BenchmarkArgs),
    /// Run the built-in sanity checks
    Selfcheck,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    /// Defaults depend on the dataset
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Network file to write; metrics go to `<out>.metrics.json`
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct BenchmarkArgs {
    /// TOML configuration; defaults reproduce the full benchmark
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated subset of the configured datasets
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    qs: Option<Vec<f64>>,
    /// Comma-separated subset of shift, scaling, retraining, restructuring
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, default_value = "benchmark-out")]
    out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation; exit status 2.
    Usage(String),
    /// Exit status 1.
    Run(String),
}

impl From<refxplain::Error> for CliError {
    fn from(e: refxplain::Error) -> Self {
        CliError::Run(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Explain(args) => explain::run(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Selfcheck => cmd_selfcheck(),
    });
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("REFXPLAIN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("REFXPLAIN_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Run(e.to_string()))
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, CliError> {
    let spec = args.data.spec(args.seed)?.ok_or_else(|| CliError::Usage("train needs --dataset".into()))?;
    let splits = spec.load()?;
    let mut tc = spec.default_training();
    if let Some(lr) = args.lr {
        tc.learning_rate = lr;
    }
    if let Some(e) = args.epochs {
        tc.epochs = e;
    }
    if let Some(b) = args.batch_size {
        tc.batch_size = b;
    }
    tc.seed = seed::derive(args.seed, &["train".into()]);
    let init = DenseNetwork::init(
        &[splits.train.dim(), args.hidden, 1],
        splits.unit.as_str(),
        seed::derive(args.seed, &["init".into()]),
    )?;
    let (scaled, metrics) = train(&init, &splits.train, &tc)?;
    let test_r2 = r_squared(&scaled, &splits.test).ok();
    let net = scaled.rescale_to_original_units(&splits.target)?;
    NetFile::new(net).save(&args.out)?;

    let summary = TrainSummary {
        data: spec.clone(),
        samples: splits.raw_len,
        feature_names: splits.feature_names.clone(),
        unit: splits.unit.clone(),
        hidden: args.hidden,
        train: tc,
        train_r2: metrics.train_r2,
        test_r2,
        train_mse: metrics.final_train_mse,
        feature_scaling: splits.features.clone(),
        target_scaling: splits.target,
    };
    let sidecar = sidecar_path(&args.out);
    let json = serde_json::to_string_pretty(&summary).expect("summaries always serialize");
    std::fs::write(&sidecar, json).map_err(|e| CliError::Run(format!("{}: {e}", sidecar.display())))?;

    let fmt = |r: Option<f64>| r.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    println!("dataset {}: n={}, d={}, unit: {}", spec.dataset, splits.raw_len, splits.train.dim(), splits.unit);
    println!("train R² = {}", fmt(metrics.train_r2));
    println!("test R²  = {}", fmt(test_r2));
    println!("wrote {} and {}", args.out.display(), sidecar.display());
    Ok(ExitCode::SUCCESS)
}

fn parse_method(name: &str) -> Result<Method, CliError> {
    Method::ALL
        .into_iter()
        .find(|m| m.label() == name)
        .ok_or_else(|| CliError::Usage(format!("unknown benchmark method `{name}`")))
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<ExitCode, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            BenchmarkConfig::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => BenchmarkConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.repeats {
        cfg.repeats = r;
    }
    if let Some(names) = &args.datasets {
        cfg.restrict_datasets(names).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(qs) = args.qs {
        cfg.qs = qs;
    }
    if let Some(methods) = &args.methods {
        cfg.methods = methods.iter().map(|m| parse_method(m)).collect::<Result<_, _>>()?;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let report = run_benchmark(&cfg)?;
    let written = report.write_to(&args.out)?;
    print!("{}", report.to_csv());
    for m in report.models.iter().filter(|m| m.error.is_some()) {
        eprintln!("model {} repeat {}: {}", m.dataset, m.repeat, m.error.as_deref().unwrap_or_default());
    }
    let failures: Vec<_> = report.records.iter().filter(|r| r.error.is_some()).collect();
    for r in &failures {
        eprintln!(
            "failed: {} q={} {} repeat {}: {}",
            r.dataset,
            r.q,
            r.method.label(),
            r.repeat,
            r.error.as_deref().unwrap_or_default()
        );
    }
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    let rate = report.success_rate();
    if rate >= 0.9 {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("only {:.1}% of repeats succeeded", 100.0 * rate);
        Ok(ExitCode::from(1))
    }
}

fn cmd_selfcheck() -> Result<ExitCode, CliError> {
    let report = run_selfcheck(&SelfcheckOptions::default())?;
    print!("{}", report.table());
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        let names: Vec<&str> = report.failed().iter().map(|c| c.name).collect();
        eprintln!("failed: {}", names.join(", "));
        Ok(ExitCode::from(1))
    }
}
