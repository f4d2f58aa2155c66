//! Dense feed-forward ReLU regression networks.
//!
//! A [`DenseNetwork`] is a stack of [`DenseLayer`]s: every hidden layer uses
//! ReLU and the last layer is a single linear output unit. The output carries a
//! free-text unit label that flows into every explanation computed from it.

mod io;
mod train;

pub use io::{NetFile, RestructureMetadata, NET_FORMAT};
pub use train::{mse, r_squared, train, train_on, Freeze, TrainConfig, TrainMetrics};

use rand::Rng as _;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::datasets::TargetScaling;
use crate::model::{Differentiable, Model};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative with the inactive-side subgradient at the kink (z = 0 gives 0).
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// One affine map followed by an elementwise activation.
///
/// Weights are stored row-major with shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidNetwork(format!("layer dimensions must be positive, got {out_dim}x{in_dim}")));
        }
        if weights.len() != in_dim * out_dim {
            return Err(Error::InvalidNetwork(format!(
                "weight array has {} entries, expected {out_dim}x{in_dim} = {}",
                weights.len(),
                in_dim * out_dim
            )));
        }
        if biases.len() != out_dim {
            return Err(Error::InvalidNetwork(format!("bias array has {} entries, expected {out_dim}", biases.len())));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork("non-finite weight or bias".into()));
        }
        Ok(Self { in_dim, out_dim, weights, biases, activation })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Incoming weights of output unit `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.in_dim..(k + 1) * self.in_dim]
    }

    #[inline]
    pub fn weight(&self, k: usize, j: usize) -> f64 {
        self.weights[k * self.in_dim + j]
    }

    fn preactivate_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(k, b)| b + dot(self.row(k), input)));
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-layer pre- and post-activations from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    /// `activations[0]` is the input; `activations[l + 1]` is the output of layer `l`.
    pub activations: Vec<Vec<f64>>,
    /// Pre-activations `z` of each layer.
    pub pre: Vec<Vec<f64>>,
    /// Model prediction (the last pre-activation).
    pub output: f64,
}

impl ActivationTrace {
    /// Input seen by layer `l`.
    pub fn layer_input(&self, l: usize) -> &[f64] {
        &self.activations[l]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    layers: Vec<DenseLayer>,
    output_unit: String,
}

impl DenseNetwork {
    pub fn new(layers: Vec<DenseLayer>, output_unit: impl Into<String>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        };
        if last.out_dim != 1 {
            return Err(Error::InvalidNetwork(format!(
                "only single-output regression is supported; final layer has {} outputs",
                last.out_dim
            )));
        }
        if last.activation != Activation::Identity {
            return Err(Error::InvalidNetwork("final layer must be linear".into()));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::InvalidNetwork(format!(
                    "layer {l} outputs {} values but layer {} expects {}",
                    pair[0].out_dim,
                    l + 1,
                    pair[1].in_dim
                )));
            }
            if pair[0].activation != Activation::Relu {
                return Err(Error::InvalidNetwork(format!("hidden layer {l} must use ReLU")));
            }
        }
        Ok(Self { layers, output_unit: output_unit.into() })
    }

    /// Random network with the given layer widths, `dims[0]` being the input
    /// dimension and the last entry 1. Weights are drawn uniformly from
    /// `±sqrt(6 / (fan_in + fan_out))`; biases start at zero.
    pub fn init(dims: &[usize], output_unit: impl Into<String>, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidNetwork("need at least input and output widths".into()));
        }
        let mut rng = seed::rng(seed);
        let n = dims.len() - 1;
        let mut layers = Vec::with_capacity(n);
        for (l, w) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            if fan_in == 0 || fan_out == 0 {
                return Err(Error::InvalidNetwork("layer widths must be positive".into()));
            }
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
            let weights = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
            let act = if l + 1 == n { Activation::Identity } else { Activation::Relu };
            layers.push(DenseLayer::new(fan_in, fan_out, weights, vec![0.0; fan_out], act)?);
        }
        Self::new(layers, output_unit)
    }

    /// Same as [`init`](Self::init) but with hidden biases drawn uniformly
    /// from `±bias_scale`; handy for tests that need kinks away from the origin.
    pub fn init_with_biases(
        dims: &[usize],
        output_unit: impl Into<String>,
        seed: u64,
        bias_scale: f64,
    ) -> Result<Self> {
        let mut net = Self::init(dims, output_unit, seed)?;
        let mut rng = seed::rng(seed ^ 0xb1a5);
        for layer in &mut net.layers {
            for b in &mut layer.biases {
                *b = rng.random_range(-bias_scale..=bias_scale);
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn output_unit(&self) -> &str {
        &self.output_unit
    }

    pub fn set_output_unit(&mut self, unit: impl Into<String>) {
        self.output_unit = unit.into();
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn top(&self) -> &DenseLayer {
        self.layers.last().expect("validated non-empty")
    }

    pub(crate) fn top_mut(&mut self) -> &mut DenseLayer {
        self.layers.last_mut().expect("validated non-empty")
    }

    pub fn has_biases(&self) -> bool {
        self.layers.iter().any(|l| l.biases.iter().any(|&b| b != 0.0))
    }

    /// Copy with every bias set to zero.
    pub fn without_biases(&self) -> Self {
        let mut net = self.clone();
        for layer in &mut net.layers {
            layer.biases.iter_mut().for_each(|b| *b = 0.0);
        }
        net
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::InputShape { expected: self.input_dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("input contains a non-finite value".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<ActivationTrace> {
        self.check_input(x)?;
        Ok(self.trace_unchecked(x))
    }

    pub(crate) fn trace_unchecked(&self, x: &[f64]) -> ActivationTrace {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        activations.push(x.to_vec());
        for layer in &self.layers {
            let mut z = Vec::with_capacity(layer.out_dim);
            layer.preactivate_into(activations.last().expect("input pushed"), &mut z);
            activations.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
            pre.push(z);
        }
        let output = pre.last().expect("at least one layer")[0];
        ActivationTrace { activations, pre, output }
    }

    /// Prediction only, without keeping the trace.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.preactivate_into(&cur, &mut next);
            for v in &mut next {
                *v = layer.activation.apply(*v);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// `∂y/∂x` by reverse accumulation.
    pub fn backprop_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.gradient_of_trace(&self.trace_unchecked(x)))
    }

    pub(crate) fn gradient_of_trace(&self, trace: &ActivationTrace) -> Vec<f64> {
        // delta holds ∂y/∂z for the current layer
        let mut delta = vec![1.0];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let mut upstream = vec![0.0; layer.in_dim];
            for (k, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                for (u, w) in upstream.iter_mut().zip(layer.row(k)) {
                    *u += d * w;
                }
            }
            if l > 0 {
                let below = &self.layers[l - 1];
                for (u, z) in upstream.iter_mut().zip(&trace.pre[l - 1]) {
                    *u *= below.activation.derivative(*z);
                }
            }
            delta = upstream;
        }
        delta
    }

    /// Maps outputs from the `[0, 1]` training scale back to original units:
    /// `new(x) = (t_max - t_min) * old(x) + t_min`.
    pub fn rescale_to_original_units(&self, scaling: &TargetScaling) -> Result<Self> {
        let scale = scaling.t_max - scaling.t_min;
        if !(scale.abs() > 0.0) || !scale.is_finite() {
            return Err(Error::Precondition(format!(
                "target scaling has zero or invalid range ({}, {})",
                scaling.t_min, scaling.t_max
            )));
        }
        let mut net = self.clone();
        let top = net.top_mut();
        top.weights.iter_mut().for_each(|w| *w *= scale);
        top.biases[0] = top.biases[0] * scale + scaling.t_min;
        Ok(net)
    }
}

impl Model for DenseNetwork {
    fn input_dim(&self) -> usize {
        DenseNetwork::input_dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        self.predict_unchecked(x)
    }

    fn output_unit(&self) -> &str {
        &self.output_unit
    }
}

impl Differentiable for DenseNetwork {
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        self.gradient_of_trace(&self.trace_unchecked(x))
    }
}

/// The two-bidder auction price `max(x1, x2)` written with three ReLU units:
/// `½(x1 + x2)⁺ + ½(x1 − x2)⁺ + ½(x2 − x1)⁺`. Exact on the nonnegative quadrant.
pub fn build_max_network() -> DenseNetwork {
    let hidden = DenseLayer::new(2, 3, vec![1.0, 1.0, 1.0, -1.0, -1.0, 1.0], vec![0.0; 3], Activation::Relu)
        .expect("static shape");
    let top = DenseLayer::new(3, 1, vec![0.5; 3], vec![0.0], Activation::Identity).expect("static shape");
    DenseNetwork::new(vec![hidden, top], "monetary units").expect("static shape")
}
