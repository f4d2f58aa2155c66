use serde::{Deserialize, Serialize};

use crate::datasets::TabularDataset;
use crate::network::{train_on, DenseNetwork, Freeze, TrainConfig};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrainConfig {
    /// Samples whose shifted teacher output `f(x) − ỹ` lies in
    /// `[tau_minus, tau_plus]` form the retraining set.
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub freeze: Freeze,
    /// Start from the original parameters rather than a fresh initialization.
    pub init_from_original: bool,
    /// Stop early once the band MSE falls to this level (checked every
    /// `check_every` epochs, starting after `min_epochs`).
    pub stop_at_mse: Option<f64>,
    pub check_every: usize,
    pub min_epochs: usize,
    /// `freeze` here is ignored in favour of the field above; the batch size
    /// is capped at the band size.
    pub train: TrainConfig,
}

impl Default for RetrainConfig {
    fn default() -> Self {
        Self {
            tau_minus: -0.3,
            tau_plus: f64::INFINITY,
            freeze: Freeze::TopBiases,
            init_from_original: true,
            stop_at_mse: None,
            check_every: 10,
            min_epochs: 0,
            train: TrainConfig { epochs: 100, ..TrainConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrainOutcome {
    pub network: DenseNetwork,
    pub band_size: usize,
    /// MSE against `f(x) − ỹ` on the band after retraining.
    pub band_mse: f64,
    pub epochs_run: usize,
    pub warnings: Vec<String>,
}

/// Fine-tune a copy of `net` so that it outputs `f(x) − ỹ` on the samples of
/// `data` whose shifted output falls in the configured band.
pub fn retrain(
    net: &DenseNetwork,
    data: &TabularDataset,
    reference: f64,
    cfg: &RetrainConfig,
) -> Result<RetrainOutcome> {
    if data.dim() != net.input_dim() {
        return Err(Error::InputShape { expected: net.input_dim(), got: data.dim() });
    }
    if !(cfg.tau_minus <= cfg.tau_plus) {
        return Err(Error::Config(format!("retraining band [{}, {}] is empty", cfg.tau_minus, cfg.tau_plus)));
    }
    if cfg.check_every == 0 {
        return Err(Error::Config("check_every must be at least 1".into()));
    }
    let d = data.dim();
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for i in 0..data.len() {
        let x = data.row(i);
        let g = net.predict_unchecked(x) - reference;
        if g >= cfg.tau_minus && g <= cfg.tau_plus {
            features.extend_from_slice(x);
            targets.push(g);
        }
    }
    let n = targets.len();
    if n == 0 {
        return Err(Error::Config(format!(
            "no sample has f(x) - {reference} within [{}, {}]",
            cfg.tau_minus, cfg.tau_plus
        )));
    }
    let start = if cfg.init_from_original {
        net.clone()
    } else {
        let mut dims = vec![d];
        dims.extend(net.layers().iter().map(|l| l.out_dim()));
        DenseNetwork::init(&dims, net.output_unit(), cfg.train.seed)?
    };

    let mut train_cfg = cfg.train.clone();
    train_cfg.freeze = cfg.freeze;
    train_cfg.batch_size = train_cfg.batch_size.min(n);
    let band_mse = |m: &DenseNetwork| {
        (0..n)
            .map(|i| {
                let e = m.predict_unchecked(&features[i * d..(i + 1) * d]) - targets[i];
                e * e
            })
            .sum::<f64>()
            / n as f64
    };

    let mut current = start.clone();
    let mut epochs_run = 0;
    match cfg.stop_at_mse {
        None => {
            current = train_on(&current, &features, &targets, &train_cfg)?.0;
            epochs_run = train_cfg.epochs;
        }
        Some(level) => {
            let first = cfg.min_epochs.min(cfg.train.epochs);
            if first > 0 {
                let mut c = train_cfg.clone();
                c.epochs = first;
                current = train_on(&current, &features, &targets, &c)?.0;
                epochs_run = first;
            }
            let mut chunk = 0u64;
            while epochs_run < cfg.train.epochs && band_mse(&current) > level {
                let mut c = train_cfg.clone();
                c.epochs = cfg.check_every.min(cfg.train.epochs - epochs_run);
                c.seed = seed::derive(cfg.train.seed, &["retrain-chunk".into(), chunk.into()]);
                current = train_on(&current, &features, &targets, &c)?.0;
                epochs_run += c.epochs;
                chunk += 1;
            }
        }
    }

    let mut warnings = Vec::new();
    if let Some(share) = top_bias_share(&start, &current) {
        if share > 0.99 {
            warnings.push(format!(
                "{:.1}% of the parameter change is in the output bias; retraining mostly shifted the output",
                100.0 * share
            ));
        }
    }
    let band_mse = band_mse(&current);
    Ok(RetrainOutcome { network: current, band_size: n, band_mse, epochs_run, warnings })
}

/// Fraction of the squared parameter change carried by the output bias.
fn top_bias_share(before: &DenseNetwork, after: &DenseNetwork) -> Option<f64> {
    let mut total = 0.0;
    for (a, b) in before.layers().iter().zip(after.layers()) {
        let sq = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        total += sq(a.weights(), b.weights()) + sq(a.biases(), b.biases());
    }
    let top = before.top().biases()[0] - after.top().biases()[0];
    (total > 0.0).then(|| top * top / total)
}
