use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{aggregate, BenchmarkReport, ModelRecord, Provenance, RepeatRecord};
use super::{filter_instances, mse, random_mse, reference_explanation, reference_grid, ClipSide, DEFAULT_K_RANDOM};
use crate::attribution::{lrp, Explanation, LrpConfig};
use crate::datasets::{load_csv, load_named, FeatureScaling, TabularDataset, TargetScaling};
use crate::network::{r_squared, train, DenseNetwork, Freeze, TrainConfig};
use crate::refvalue::{baseline_scale, baseline_shift, restructure, retrain, FloodMode, RetrainConfig};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shift,
    Scaling,
    Retraining,
    Restructuring,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Shift, Method::Scaling, Method::Retraining, Method::Restructuring];

    pub fn label(self) -> &'static str {
        match self {
            Method::Shift => "shift",
            Method::Scaling => "scaling",
            Method::Retraining => "retraining",
            Method::Restructuring => "restructuring",
        }
    }
}

/// One benchmark dataset: a built-in name, or a CSV file when `path` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default)]
    pub unit: String,
    /// Training hyperparameters; the seed is replaced per repeat.
    #[serde(default)]
    pub train: TrainConfig,
}

impl DatasetSpec {
    pub fn builtin(name: &str, train: TrainConfig) -> Self {
        Self { name: name.into(), path: None, target: None, unit: String::new(), train }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub repeats: usize,
    pub qs: Vec<f64>,
    pub methods: Vec<Method>,
    /// Rows generated for synthetic datasets.
    pub n_synthetic: usize,
    pub train_fraction: f64,
    /// Scored instances per (dataset, q, repeat), taken from the held-out split.
    pub max_instances: usize,
    pub k_random: usize,
    pub hidden: usize,
    pub lrp: LrpConfig,
    /// Band and freezing for retraining. The surrogate is trained with each
    /// dataset's own training configuration; `retrain.train.epochs` only
    /// bounds the extra epochs allowed by `retrain_until_original_mse`.
    pub retrain: RetrainConfig,
    /// After the original epoch budget, keep training until the band MSE
    /// reaches the original model's training MSE.
    pub retrain_until_original_mse: bool,
    pub datasets: Vec<DatasetSpec>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let tc =
            |learning_rate, epochs| TrainConfig { learning_rate, epochs, batch_size: 32, ..TrainConfig::default() };
        Self {
            seed: 0,
            repeats: 10,
            qs: super::DEFAULT_QS.to_vec(),
            methods: Method::ALL.to_vec(),
            n_synthetic: 2000,
            train_fraction: 0.8,
            max_instances: 100,
            k_random: DEFAULT_K_RANDOM,
            hidden: 256,
            lrp: LrpConfig::two_layer_default(),
            retrain: RetrainConfig { freeze: Freeze::None, ..RetrainConfig::default() },
            retrain_until_original_mse: true,
            datasets: vec![
                DatasetSpec::builtin("max", tc(0.05, 600)),
                DatasetSpec::builtin("linear", tc(0.05, 100)),
                DatasetSpec::builtin("friedman", tc(0.05, 300)),
                DatasetSpec::builtin("diabetes", tc(0.02, 300)),
                DatasetSpec::builtin("boston", tc(0.02, 300)),
            ],
        }
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("benchmark config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.qs.is_empty() || self.qs.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return bad(format!("qs must be a nonempty list of fractions in [0, 1], got {:?}", self.qs));
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.datasets.is_empty() {
            return bad("no datasets selected".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.max_instances == 0 || self.k_random == 0 || self.hidden == 0 {
            return bad("max_instances, k_random and hidden must be positive".into());
        }
        self.lrp.validate(2)?;
        for ds in &self.datasets {
            if ds.path.is_some() != ds.target.is_some() {
                return bad(format!("dataset `{}`: `path` and `target` go together", ds.name));
            }
        }
        Ok(())
    }

    /// Keep only the named datasets (in the given order).
    pub fn restrict_datasets(&mut self, names: &[String]) -> Result<()> {
        let mut kept = Vec::with_capacity(names.len());
        for n in names {
            match self.datasets.iter().find(|d| &d.name == n) {
                Some(d) => kept.push(d.clone()),
                None => return Err(Error::Config(format!("dataset `{n}` is not in the configuration"))),
            }
        }
        self.datasets = kept;
        Ok(())
    }
}

/// Test-only switches.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BenchmarkHooks {
    /// Score the Shapley reference in place of every method's explanation.
    pub inject_reference: bool,
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    run_benchmark_with(cfg, BenchmarkHooks::default())
}

#[doc(hidden)]
pub fn run_benchmark_with(cfg: &BenchmarkConfig, hooks: BenchmarkHooks) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> =
        (0..cfg.datasets.len()).flat_map(|d| (0..cfg.repeats).map(move |r| (d, r))).collect();
    let outcomes: Vec<(ModelRecord, Vec<RepeatRecord>)> =
        tasks.par_iter().map(|&(d, r)| run_repeat(cfg, &cfg.datasets[d], r, hooks)).collect();
    let mut models = Vec::with_capacity(outcomes.len());
    let mut records = Vec::new();
    for (m, recs) in outcomes {
        models.push(m);
        records.extend(recs);
    }
    let aggregates = aggregate(cfg, &records);
    Ok(BenchmarkReport { provenance: Provenance::for_config(cfg), models, records, aggregates })
}

fn load_dataset(spec: &DatasetSpec, n: usize, seed: u64) -> Result<TabularDataset> {
    match (&spec.path, &spec.target) {
        (Some(path), Some(target)) => load_csv(path, target, &spec.unit),
        _ => load_named(&spec.name, n, seed),
    }
}

struct Prepared {
    net: DenseNetwork,
    train: TabularDataset,
    eval: TabularDataset,
    record: ModelRecord,
}

fn prepare(cfg: &BenchmarkConfig, spec: &DatasetSpec, repeat: usize) -> Result<Prepared> {
    let s = |tag: &str| seed::derive(cfg.seed, &[spec.name.as_str().into(), repeat.into(), tag.into()]);
    let raw = load_dataset(spec, cfg.n_synthetic, s("data"))?;
    let (train_raw, test_raw) = raw.split(cfg.train_fraction, s("split"))?;
    let fs = FeatureScaling::fit(&train_raw)?;
    let ts = TargetScaling::fit(train_raw.targets())?;
    let train_set = train_raw.standardize_with(&fs, &ts)?;
    let eval_set = test_raw.standardize_with(&fs, &ts)?;

    let init = DenseNetwork::init(&[train_set.dim(), cfg.hidden, 1], train_set.unit(), s("init"))?;
    let tc = TrainConfig { seed: s("train"), ..spec.train.clone() };
    let (net, metrics) = train(&init, &train_set, &tc)?;
    let record = ModelRecord {
        dataset: spec.name.clone(),
        repeat,
        train_r2: metrics.train_r2,
        test_r2: r_squared(&net, &eval_set).ok(),
        train_mse: metrics.final_train_mse,
        error: None,
    };
    Ok(Prepared { net, train: train_set, eval: eval_set, record })
}

fn run_repeat(
    cfg: &BenchmarkConfig,
    spec: &DatasetSpec,
    repeat: usize,
    hooks: BenchmarkHooks,
) -> (ModelRecord, Vec<RepeatRecord>) {
    let failed = |cause: &str| -> Vec<RepeatRecord> {
        cfg.qs
            .iter()
            .flat_map(|&q| {
                cfg.methods.iter().map(move |&m| RepeatRecord::failure(&spec.name, q, f64::NAN, m, repeat, cause))
            })
            .collect()
    };
    let p = match prepare(cfg, spec, repeat) {
        Ok(p) => p,
        Err(e) => {
            let record = ModelRecord {
                dataset: spec.name.clone(),
                repeat,
                train_r2: None,
                test_r2: None,
                train_mse: f64::NAN,
                error: Some(e.to_string()),
            };
            return (record, failed(&e.to_string()));
        }
    };
    let grid = match reference_grid(&p.net, &p.eval, &cfg.qs) {
        Ok(g) => g,
        Err(e) => return (p.record, failed(&e.to_string())),
    };
    let mut out = Vec::new();
    for (q, reference) in grid.references() {
        out.extend(score_reference(cfg, spec, repeat, &p, q, reference, hooks));
    }
    (p.record, out)
}

/// All methods at one reference value of one repeat.
fn score_reference(
    cfg: &BenchmarkConfig,
    spec: &DatasetSpec,
    repeat: usize,
    p: &Prepared,
    q: f64,
    reference: f64,
    hooks: BenchmarkHooks,
) -> Vec<RepeatRecord> {
    let mut instances = filter_instances(&p.net, &p.eval, reference, ClipSide::Positive);
    instances.truncate(cfg.max_instances);
    if instances.is_empty() {
        let cause = format!("no held-out instance satisfies 0 <= {reference} <= f(x)");
        return cfg
            .methods
            .iter()
            .map(|&m| RepeatRecord::failure(&spec.name, q, reference, m, repeat, &cause))
            .collect();
    }
    let task_seed =
        |i: usize| seed::derive(cfg.seed, &[spec.name.as_str().into(), q.to_bits().into(), repeat.into(), i.into()]);

    let retrained = cfg.methods.contains(&Method::Retraining).then(|| {
        let mut rc = cfg.retrain.clone();
        rc.train = TrainConfig {
            seed: seed::derive(
                cfg.seed,
                &[spec.name.as_str().into(), q.to_bits().into(), repeat.into(), "retrain".into()],
            ),
            ..spec.train.clone()
        };
        if cfg.retrain_until_original_mse {
            rc.min_epochs = spec.train.epochs;
            rc.train.epochs = spec.train.epochs + cfg.retrain.train.epochs;
            rc.stop_at_mse = Some(p.record.train_mse);
        }
        retrain(&p.net, &p.train, reference, &rc).map(|o| o.network)
    });

    // per instance: reference explanation, the random MSE, and each method's MSE
    let per_instance: Vec<Result<(f64, Vec<Result<f64>>)>> = instances
        .par_iter()
        .map(|&i| {
            let x = p.eval.row(i);
            let y = p.net.predict_unchecked(x);
            let r_ref = reference_explanation(&p.net, x, reference)?;
            let denom = random_mse(&r_ref.attributions, y - reference, cfg.k_random, task_seed(i))?;
            let plain = lrp(&p.net, x, &cfg.lrp)?;
            let scores = cfg
                .methods
                .iter()
                .map(|&m| {
                    let e = if hooks.inject_reference {
                        r_ref.clone()
                    } else {
                        explain(m, &p.net, x, y, reference, &plain, &cfg.lrp, retrained.as_ref())?
                    };
                    Ok(mse(&e.attributions, &r_ref.attributions))
                })
                .collect();
            Ok((denom, scores))
        })
        .collect();

    let mut denoms = Vec::with_capacity(instances.len());
    let mut method_mse: Vec<Vec<f64>> = vec![Vec::new(); cfg.methods.len()];
    let mut method_err: Vec<Option<String>> = vec![None; cfg.methods.len()];
    for item in per_instance {
        match item {
            Ok((denom, scores)) => {
                denoms.push(denom);
                for (k, s) in scores.into_iter().enumerate() {
                    match s {
                        Ok(v) => method_mse[k].push(v),
                        Err(e) => {
                            method_err[k].get_or_insert_with(|| e.to_string());
                        }
                    }
                }
            }
            Err(e) => {
                let cause = e.to_string();
                return cfg
                    .methods
                    .iter()
                    .map(|&m| RepeatRecord::failure(&spec.name, q, reference, m, repeat, &cause))
                    .collect();
            }
        }
    }
    let mean_denom = denoms.iter().sum::<f64>() / denoms.len() as f64;
    cfg.methods
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            if let Some(cause) = &method_err[k] {
                return RepeatRecord::failure(&spec.name, q, reference, m, repeat, cause);
            }
            if !(mean_denom > 0.0) {
                return RepeatRecord::failure(&spec.name, q, reference, m, repeat, "random-attribution MSE is zero");
            }
            let mean = method_mse[k].iter().sum::<f64>() / method_mse[k].len() as f64;
            RepeatRecord {
                dataset: spec.name.clone(),
                q,
                reference_value: reference,
                method: m,
                repeat,
                n_instances: instances.len(),
                normalized_mse: Some(mean / mean_denom),
                error: None,
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn explain(
    method: Method,
    net: &DenseNetwork,
    x: &[f64],
    y: f64,
    reference: f64,
    plain: &Explanation,
    lrp_cfg: &LrpConfig,
    retrained: Option<&Result<DenseNetwork>>,
) -> Result<Explanation> {
    match method {
        Method::Shift => Ok(baseline_shift(plain, reference)),
        Method::Scaling => baseline_scale(plain, reference),
        Method::Restructuring => {
            let r = restructure(net, x, reference, FloodMode::Symmetric)?;
            Ok(lrp(&r.network, x, lrp_cfg)?.relabel(y, reference))
        }
        Method::Retraining => match retrained {
            Some(Ok(g)) => Ok(lrp(g, x, lrp_cfg)?.relabel(y, reference)),
            Some(Err(e)) => Err(Error::Precondition(format!("retraining failed: {e}"))),
            None => unreachable!("retrained model prepared whenever the method is selected"),
        },
    }
}
