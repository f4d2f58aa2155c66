use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DenseNetwork;
use crate::datasets::TabularDataset;
use crate::{seed, Error, Result};

/// Which parameters stay fixed during (re)training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Freeze {
    #[default]
    None,
    /// Output-layer bias keeps its original value.
    TopBiases,
    /// Every weight and the output bias are fixed; only hidden biases move.
    AllWeightsAdjustBiases,
    /// Every layer below the output is fixed; only the output layer moves.
    FeatureExtractor,
}

impl Freeze {
    /// `(weights_trainable, biases_trainable)` for layer `l` of `n`.
    fn trainable(self, l: usize, n: usize) -> (bool, bool) {
        let top = l + 1 == n;
        match self {
            Freeze::None => (true, true),
            Freeze::TopBiases => (true, !top),
            Freeze::AllWeightsAdjustBiases => (false, !top),
            Freeze::FeatureExtractor => (top, top),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub freeze: Freeze,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-2, epochs: 500, batch_size: 32, seed: 0, freeze: Freeze::None }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 || self.batch_size > n_samples {
            return Err(Error::Config(format!("batch_size must lie in [1, {n_samples}], got {}", self.batch_size)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub epochs: usize,
    pub samples: usize,
    pub final_train_mse: f64,
    /// `None` when the training targets have zero variance.
    pub train_r2: Option<f64>,
    /// Mean minibatch loss per epoch.
    pub loss_history: Vec<f64>,
}

/// Minibatch SGD on mean squared error over the dataset's stored targets.
pub fn train(net: &DenseNetwork, data: &TabularDataset, cfg: &TrainConfig) -> Result<(DenseNetwork, TrainMetrics)> {
    if data.dim() != net.input_dim() {
        return Err(Error::InputShape { expected: net.input_dim(), got: data.dim() });
    }
    train_on(net, data.features(), data.targets(), cfg)
}

/// Minibatch SGD on `(features, targets)`, features flattened row-major.
pub fn train_on(
    net: &DenseNetwork,
    features: &[f64],
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<(DenseNetwork, TrainMetrics)> {
    let d = net.input_dim();
    let n = targets.len();
    if features.len() != n * d {
        return Err(Error::InputShape { expected: n * d, got: features.len() });
    }
    cfg.validate(n)?;

    let mut net = net.clone();
    let n_layers = net.layers.len();
    let masks: Vec<(bool, bool)> = (0..n_layers).map(|l| cfg.freeze.trainable(l, n_layers)).collect();
    let mut grad_w: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
    let mut grad_b: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect();

    let mut rng = seed::rng(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad_w.iter_mut().flatten().for_each(|g| *g = 0.0);
            grad_b.iter_mut().flatten().for_each(|g| *g = 0.0);
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let x = &features[i * d..(i + 1) * d];
                let trace = net.trace_unchecked(x);
                let err = trace.output - targets[i];
                epoch_loss += err * err;
                accumulate(&net, &trace, err * scale, &masks, &mut grad_w, &mut grad_b);
            }
            for (l, layer) in net.layers.iter_mut().enumerate() {
                let (tw, tb) = masks[l];
                if tw {
                    for (w, g) in layer.weights.iter_mut().zip(&grad_w[l]) {
                        *w -= cfg.learning_rate * g;
                    }
                }
                if tb {
                    for (b, g) in layer.biases.iter_mut().zip(&grad_b[l]) {
                        *b -= cfg.learning_rate * g;
                    }
                }
            }
        }
        let epoch_loss = epoch_loss / n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch: epoch + 1, loss: epoch_loss });
        }
        loss_history.push(epoch_loss);
    }

    let final_train_mse = mse_on(&net, features, targets);
    let train_r2 = r_squared_on(&net, features, targets).ok();
    let metrics = TrainMetrics { epochs: cfg.epochs, samples: n, final_train_mse, train_r2, loss_history };
    Ok((net, metrics))
}

fn accumulate(
    net: &DenseNetwork,
    trace: &super::ActivationTrace,
    d_output: f64,
    masks: &[(bool, bool)],
    grad_w: &mut [Vec<f64>],
    grad_b: &mut [Vec<f64>],
) {
    let mut delta = vec![d_output];
    for (l, layer) in net.layers.iter().enumerate().rev() {
        let input = trace.layer_input(l);
        let (tw, tb) = masks[l];
        if tw {
            let gw = &mut grad_w[l];
            for (k, dk) in delta.iter().enumerate() {
                if *dk == 0.0 {
                    continue;
                }
                let row = &mut gw[k * layer.in_dim..(k + 1) * layer.in_dim];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += dk * a;
                }
            }
        }
        if tb {
            for (g, dk) in grad_b[l].iter_mut().zip(&delta) {
                *g += dk;
            }
        }
        if l == 0 {
            break;
        }
        // nothing below a fully frozen prefix needs gradients
        if masks[..l].iter().all(|&(w, b)| !w && !b) {
            break;
        }
        let below = &net.layers[l - 1];
        let mut upstream = vec![0.0; layer.in_dim];
        for (k, dk) in delta.iter().enumerate() {
            if *dk == 0.0 {
                continue;
            }
            for (u, w) in upstream.iter_mut().zip(layer.row(k)) {
                *u += dk * w;
            }
        }
        for (u, z) in upstream.iter_mut().zip(&trace.pre[l - 1]) {
            *u *= below.activation.derivative(*z);
        }
        delta = upstream;
    }
}

fn mse_on(net: &DenseNetwork, features: &[f64], targets: &[f64]) -> f64 {
    let d = net.input_dim();
    let n = targets.len();
    (0..n)
        .map(|i| {
            let e = net.predict_unchecked(&features[i * d..(i + 1) * d]) - targets[i];
            e * e
        })
        .sum::<f64>()
        / n as f64
}

fn r_squared_on(net: &DenseNetwork, features: &[f64], targets: &[f64]) -> Result<f64> {
    let n = targets.len();
    if n == 0 {
        return Err(Error::UndefinedMetric("R² of an empty dataset".into()));
    }
    let mean = targets.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = targets.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("R² with zero target variance".into()));
    }
    let ss_res = mse_on(net, features, targets) * n as f64;
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean squared error of the network on the dataset's stored targets.
pub fn mse(net: &DenseNetwork, data: &TabularDataset) -> Result<f64> {
    if data.dim() != net.input_dim() {
        return Err(Error::InputShape { expected: net.input_dim(), got: data.dim() });
    }
    if data.is_empty() {
        return Err(Error::UndefinedMetric("MSE of an empty dataset".into()));
    }
    Ok(mse_on(net, data.features(), data.targets()))
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(net: &DenseNetwork, data: &TabularDataset) -> Result<f64> {
    if data.dim() != net.input_dim() {
        return Err(Error::InputShape { expected: net.input_dim(), got: data.dim() });
    }
    r_squared_on(net, data.features(), data.targets())
}
