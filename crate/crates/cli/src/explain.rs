use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, ValueEnum};

use refxplain::attribution::{
    clip_negative, clip_positive, gradient_x_input, integrated_gradients, lrp, shapley_exact, shapley_sampled,
    Baseline, Explanation, LrpConfig, LrpRule,
};
use refxplain::datasets::TargetScaling;
use refxplain::evaluation::reference_grid;
use refxplain::network::{build_max_network, DenseNetwork, Freeze, NetFile};
use refxplain::refvalue::{baseline_scale, baseline_shift, restructure, retrain, FloodMode, RetrainConfig};

use crate::data::{DataArgs, DataSpec, Splits, TrainSummary};
use crate::CliError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lrp,
    Gxi,
    Ig,
    Shapley,
    ShapleySampled,
    RestructureLrp,
    RetrainLrp,
    BaselineShift,
    BaselineScale,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BuiltinArg {
    /// Two-bidder auction price max(x1, x2)
    Max2,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FloodArg {
    Symmetric,
    Asymmetric,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FreezeArg {
    None,
    TopBiases,
    AllWeightsAdjustBiases,
    FeatureExtractor,
}

#[derive(Args)]
pub struct ExplainArgs {
    /// Network file written by `train`
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    net: Option<PathBuf>,
    #[arg(long, value_enum)]
    builtin: Option<BuiltinArg>,
    /// Comma-separated input in the network's input space
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "index",
        required_unless_present = "index"
    )]
    input: Option<Vec<f64>>,
    /// Row of the held-out split
    #[arg(long)]
    index: Option<usize>,
    /// Reference value in the output unit
    #[arg(long, allow_hyphen_values = true, conflicts_with = "q")]
    reference: Option<f64>,
    /// Reference at q·f_max + (1 − q)·f(0) over the held-out split
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Write the explanation as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Seed the dataset was generated with (defaults to the one recorded by `train`)
    #[arg(long)]
    seed: Option<u64>,
    /// LRP rule per layer, input layer first: gamma=G, epsilon=E or alphabeta=A,B
    #[arg(long = "rule")]
    rules: Vec<String>,
    /// Let biases absorb relevance
    #[arg(long)]
    keep_biases: bool,
    /// Integration steps for `ig`
    #[arg(long, default_value_t = 128)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    sample_seed: u64,
    /// Comma-separated baseline for ig and Shapley (default: the origin)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    baseline: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "symmetric")]
    flood: FloodArg,
    #[arg(long, value_enum, default_value = "none")]
    freeze: FreezeArg,
    /// Lower band edge for retraining, on the [0, 1] training scale
    #[arg(long, default_value_t = -0.3, allow_hyphen_values = true)]
    tau_minus: f64,
}

fn parse_rule(text: &str) -> Result<LrpRule, CliError> {
    let bad = || CliError::Usage(format!("cannot parse LRP rule `{text}`"));
    let (name, value) = text.split_once('=').ok_or_else(bad)?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match name.trim() {
        "gamma" => Ok(LrpRule::gamma(num(value)?)),
        "epsilon" => Ok(LrpRule::epsilon(num(value)?)),
        "alphabeta" => {
            let (a, b) = value.split_once(',').ok_or_else(bad)?;
            Ok(LrpRule::AlphaBeta { alpha: num(a)?, beta: num(b)? })
        }
        _ => Err(bad()),
    }
}

struct Context {
    net: DenseNetwork,
    summary: Option<TrainSummary>,
    data: Option<DataSpec>,
}

impl Context {
    fn splits(&mut self) -> Result<Splits, CliError> {
        let spec = self.data.as_ref().ok_or_else(|| {
            CliError::Usage(
                "this needs the dataset: pass --dataset (or keep the `.metrics.json` written by train)".into(),
            )
        })?;
        spec.load()
    }

    fn target_scaling(&self) -> Option<TargetScaling> {
        self.summary.as_ref().map(|s| s.target_scaling)
    }
}

fn feature_names(ctx: &Context, d: usize) -> Vec<String> {
    match &ctx.summary {
        Some(s) if s.feature_names.len() == d => s.feature_names.clone(),
        _ => (1..=d).map(|i| format!("x{i}")).collect(),
    }
}

pub fn run(args: ExplainArgs) -> Result<ExitCode, CliError> {
    let mut ctx = match (&args.net, args.builtin) {
        (Some(path), _) => {
            let summary = TrainSummary::load_for(path)?;
            let seed = args.seed.or(summary.as_ref().map(|s| s.data.seed)).unwrap_or(0);
            let data = match args.data.spec(seed)? {
                Some(spec) => Some(spec),
                None => summary.as_ref().map(|s| DataSpec { seed, ..s.data.clone() }),
            };
            Context { net: NetFile::load(path)?.network, summary, data }
        }
        (None, Some(BuiltinArg::Max2)) => {
            Context { net: build_max_network(), summary: None, data: args.data.spec(args.seed.unwrap_or(0))? }
        }
        (None, None) => unreachable!("clap requires --net or --builtin"),
    };
    let net = ctx.net.clone();
    let d = net.input_dim();

    let mut splits = None;
    let x: Vec<f64> = match (&args.input, args.index) {
        (Some(v), _) => v.clone(),
        (None, Some(i)) => {
            let s = splits.insert(ctx.splits()?);
            if i >= s.test.len() {
                return Err(CliError::Usage(format!(
                    "--index {i} is out of range; the held-out split has {} rows",
                    s.test.len()
                )));
            }
            s.test.row(i).to_vec()
        }
        (None, None) => unreachable!("clap requires --input or --index"),
    };
    if x.len() != d {
        return Err(CliError::Usage(format!("the network takes {d} inputs, got {}", x.len())));
    }

    let reference = match (args.reference, args.q) {
        (Some(r), _) => r,
        (None, Some(q)) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(CliError::Usage(format!("--q must lie in [0, 1], got {q}")));
            }
            if splits.is_none() {
                splits = Some(ctx.splits()?);
            }
            let s = splits.as_ref().expect("just loaded");
            reference_grid(&net, &s.test, &[q])?.reference(q)
        }
        (None, None) => 0.0,
    };
    if !reference.is_finite() {
        return Err(CliError::Usage("reference value must be finite".into()));
    }

    let lrp_cfg = if args.rules.is_empty() {
        let mut c = LrpConfig::default_for(net.layers().len());
        c.ignore_biases = !args.keep_biases;
        c
    } else {
        LrpConfig {
            rules: args.rules.iter().map(|r| parse_rule(r)).collect::<Result<_, _>>()?,
            ignore_biases: !args.keep_biases,
        }
    };
    let baseline = match &args.baseline {
        Some(b) if b.len() != d => {
            return Err(CliError::Usage(format!("--baseline needs {d} values, got {}", b.len())))
        }
        Some(b) => Baseline(b.clone()),
        None => Baseline::zeros(d),
    };
    let y = net.predict(&x)?;
    let relative_only = matches!(args.method, MethodArg::Lrp | MethodArg::Gxi | MethodArg::Ig);
    if relative_only && reference != 0.0 {
        eprintln!("note: {:?} explains f itself; the reference value is not used", args.method);
    }

    let expl: Explanation = match args.method {
        MethodArg::Lrp => lrp(&net, &x, &lrp_cfg)?,
        MethodArg::Gxi => gradient_x_input(&net, &x)?,
        MethodArg::Ig => integrated_gradients(&net, &x, &baseline, args.steps)?,
        MethodArg::Shapley | MethodArg::ShapleySampled => {
            let sampled = args.method == MethodArg::ShapleySampled;
            let run = |m: &dyn refxplain::model::Model| -> refxplain::Result<Explanation> {
                if sampled {
                    shapley_sampled(&m, &x, &baseline, args.permutations, args.sample_seed)
                } else {
                    shapley_exact(&m, &x, &baseline)
                }
            };
            if args.reference.is_none() && args.q.is_none() {
                run(&net)?
            } else {
                // the clipped function vanishes at the reference, so its
                // attributions explain y − ỹ whenever it also vanishes at the baseline
                let e = if y >= reference {
                    run(&clip_positive(&net, reference))?
                } else {
                    run(&clip_negative(&net, reference))?
                };
                e.relabel(y, reference)
            }
        }
        MethodArg::RestructureLrp => {
            let mode = match args.flood {
                FloodArg::Symmetric => FloodMode::Symmetric,
                FloodArg::Asymmetric => FloodMode::Asymmetric,
            };
            let r = restructure(&net, &x, reference, mode)?;
            let mut e = lrp(&r.network, &x, &lrp_cfg)?.relabel(y, reference);
            e.method = "restructure_lrp".into();
            e.with_param("flood_t", r.flood.t).with_param("flood_mode", mode.label())
        }
        MethodArg::RetrainLrp => {
            let s = match splits.take() {
                Some(s) => s,
                None => ctx.splits()?,
            };
            let g = retrain_surrogate(&ctx, &net, &s, reference, &args)?;
            let mut e = lrp(&g, &x, &lrp_cfg)?.relabel(y, reference);
            e.method = "retrain_lrp".into();
            e
        }
        MethodArg::BaselineShift => baseline_shift(&lrp(&net, &x, &lrp_cfg)?, reference),
        MethodArg::BaselineScale => baseline_scale(&lrp(&net, &x, &lrp_cfg)?, reference)?,
    };

    print_explanation(&expl, &feature_names(&ctx, d));
    if let Some(path) = &args.out {
        std::fs::write(path, expl.to_json()).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Retrain on the `[0, 1]` target scale the network was trained on (when
/// known), then map the surrogate back to the output unit.
fn retrain_surrogate(
    ctx: &Context,
    net: &DenseNetwork,
    splits: &Splits,
    reference: f64,
    args: &ExplainArgs,
) -> Result<DenseNetwork, CliError> {
    let freeze = match args.freeze {
        FreezeArg::None => Freeze::None,
        FreezeArg::TopBiases => Freeze::TopBiases,
        FreezeArg::AllWeightsAdjustBiases => Freeze::AllWeightsAdjustBiases,
        FreezeArg::FeatureExtractor => Freeze::FeatureExtractor,
    };
    let (train_cfg, scaling) = match &ctx.summary {
        Some(s) => (s.train.clone(), ctx.target_scaling()),
        None => (ctx.data.as_ref().map(DataSpec::default_training).unwrap_or_default(), None),
    };
    let cfg = RetrainConfig { tau_minus: args.tau_minus, freeze, train: train_cfg, ..RetrainConfig::default() };
    match scaling {
        Some(ts) => {
            let width = ts.t_max - ts.t_min;
            // inverse of the output rescaling applied after training
            let to_unit = TargetScaling { t_min: -ts.t_min / width, t_max: (1.0 - ts.t_min) / width };
            let scaled = net.rescale_to_original_units(&to_unit)?;
            let g = retrain(&scaled, &splits.train, (reference - ts.t_min) / width, &cfg)?;
            report_retraining(&g.warnings, g.band_size, g.band_mse);
            Ok(g.network.rescale_to_original_units(&TargetScaling { t_min: 0.0, t_max: width })?)
        }
        None => {
            let g = retrain(net, &splits.train, reference, &cfg)?;
            report_retraining(&g.warnings, g.band_size, g.band_mse);
            Ok(g.network)
        }
    }
}

fn report_retraining(warnings: &[String], band: usize, mse: f64) {
    eprintln!("retrained on {band} samples, band MSE {mse:.3e}");
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn print_explanation(e: &Explanation, names: &[String]) {
    use std::fmt::Write as _;
    use std::io::Write as _;
    let unit = &e.unit;
    let mut s = String::new();
    let _ = writeln!(s, "method      {}", e.method);
    let _ = writeln!(s, "prediction  {} {unit}", e.prediction);
    let _ = writeln!(s, "reference   {} {unit}", e.reference_value);
    let _ = writeln!(s, "sum R       {} {unit}", e.total());
    let _ = writeln!(s, "gap         {} {unit}", e.conservation_gap);
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0);
    for (i, (name, r)) in names.iter().zip(&e.attributions).enumerate() {
        let _ = match &e.std_errors {
            Some(se) => writeln!(s, "  {name:<width$}  {r} {unit}  (± {})", se[i]),
            None => writeln!(s, "  {name:<width$}  {r} {unit}"),
        };
    }
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}
