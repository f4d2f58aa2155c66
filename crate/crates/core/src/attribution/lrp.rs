//! Layer-wise relevance propagation.
//!
//! Relevance starts at the output as the prediction and is redistributed
//! layer by layer with `R_j = Σ_k z_jk / Σ_j' z_j'k · R_k`, where the
//! contribution `z_jk` depends on the rule chosen for that layer. When biases
//! take part in the denominator, the share they absorb is lost and shows up in
//! the explanation's conservation gap.

use serde::{Deserialize, Serialize};

use super::{check_input, Explanation};
use crate::network::{DenseLayer, DenseNetwork};
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LrpRule {
    /// `z_jk = a_j·w_jk + γ·(a_j·w_jk)^±`, favouring contributions that share
    /// the sign of `Σ_j a_j·w_jk` (plus the bias, unless biases are ignored),
    /// so the denominator never falls below that sum in magnitude. For
    /// nonnegative `a` and a positive sum this is `a_j · (w_jk + γ·w_jk⁺)`.
    Gamma { gamma: f64 },
    /// `z_jk = a_j · w_jk`, denominator stabilized by `ε · sign(Σ z)`.
    Epsilon { epsilon: f64 },
    /// Positive and negative contributions split with weights `α`, `β`, `α − β = 1`.
    AlphaBeta { alpha: f64, beta: f64 },
}

impl LrpRule {
    pub fn gamma(gamma: f64) -> Self {
        LrpRule::Gamma { gamma }
    }

    pub fn epsilon(epsilon: f64) -> Self {
        LrpRule::Epsilon { epsilon }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LrpRule::Gamma { gamma } if !(gamma >= 0.0) || !gamma.is_finite() => {
                Err(Error::Config(format!("LRP gamma must be >= 0, got {gamma}")))
            }
            LrpRule::Epsilon { epsilon } if !(epsilon >= 0.0) || !epsilon.is_finite() => {
                Err(Error::Config(format!("LRP epsilon must be >= 0, got {epsilon}")))
            }
            LrpRule::AlphaBeta { alpha, beta } if !(beta >= 0.0) || ((alpha - beta) - 1.0).abs() > 1e-12 => Err(
                Error::Config(format!("LRP alpha-beta needs beta >= 0 and alpha - beta = 1, got ({alpha}, {beta})")),
            ),
            _ => Ok(()),
        }
    }

    fn label(&self) -> String {
        match *self {
            LrpRule::Gamma { gamma } => format!("gamma({gamma})"),
            LrpRule::Epsilon { epsilon } => format!("epsilon({epsilon})"),
            LrpRule::AlphaBeta { alpha, beta } => format!("alpha_beta({alpha},{beta})"),
        }
    }
}

/// One rule per weighted layer, listed from the input layer upwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrpConfig {
    pub rules: Vec<LrpRule>,
    pub ignore_biases: bool,
}

impl LrpConfig {
    pub fn uniform(rule: LrpRule, layers: usize, ignore_biases: bool) -> Self {
        Self { rules: vec![rule; layers], ignore_biases }
    }

    /// LRP-γ with γ = 2.5 on the first layer and γ = 0 on the output layer,
    /// biases left out of the propagation.
    pub fn two_layer_default() -> Self {
        Self { rules: vec![LrpRule::gamma(2.5), LrpRule::gamma(0.0)], ignore_biases: true }
    }

    /// [`two_layer_default`](Self::two_layer_default) extended to deeper nets:
    /// γ = 2.5 everywhere below the output layer.
    pub fn default_for(layers: usize) -> Self {
        let mut rules = vec![LrpRule::gamma(2.5); layers.saturating_sub(1)];
        rules.push(LrpRule::gamma(0.0));
        Self { rules, ignore_biases: true }
    }

    pub fn validate(&self, layers: usize) -> Result<()> {
        if self.rules.len() != layers {
            return Err(Error::Config(format!(
                "LRP config has {} rules but the network has {layers} weighted layers",
                self.rules.len()
            )));
        }
        self.rules.iter().try_for_each(LrpRule::validate)
    }
}

/// Explain `net` at `x`. The returned explanation has `reference_value = 0`;
/// callers explaining a shifted or restructured network relabel it.
pub fn lrp(net: &DenseNetwork, x: &[f64], cfg: &LrpConfig) -> Result<Explanation> {
    cfg.validate(net.layers().len())?;
    check_input(x, net.input_dim())?;
    let trace = net.forward(x)?;
    let mut relevance = vec![trace.output];
    for (l, layer) in net.layers().iter().enumerate().rev() {
        relevance = propagate(layer, trace.layer_input(l), &relevance, cfg.rules[l], cfg.ignore_biases);
    }
    let rules: Vec<String> = cfg.rules.iter().map(LrpRule::label).collect();
    Ok(Explanation::new("lrp", relevance, trace.output, 0.0, net.output_unit())
        .with_param("rules", rules)
        .with_param("ignore_biases", cfg.ignore_biases))
}

/// Redistribute `upper` (one value per output unit of `layer`) onto the
/// layer's inputs `a`.
pub(crate) fn propagate(layer: &DenseLayer, a: &[f64], upper: &[f64], rule: LrpRule, ignore_biases: bool) -> Vec<f64> {
    let mut lower = vec![0.0; layer.in_dim()];
    for (k, &r_k) in upper.iter().enumerate() {
        if r_k == 0.0 {
            continue;
        }
        let row = layer.row(k);
        let bias = if ignore_biases { 0.0 } else { layer.biases()[k] };
        match rule {
            LrpRule::Gamma { gamma } => {
                let positive = crate::network::dot(row, a) + bias >= 0.0;
                let m = |z: f64| if positive { z + gamma * z.max(0.0) } else { z + gamma * z.min(0.0) };
                let z = |j: usize| m(a[j] * row[j]);
                let denom: f64 = (0..row.len()).map(z).sum::<f64>() + m(bias);
                if denom == 0.0 {
                    continue;
                }
                let s = r_k / denom;
                for (j, out) in lower.iter_mut().enumerate() {
                    *out += z(j) * s;
                }
            }
            LrpRule::Epsilon { epsilon } => {
                let mut denom: f64 = crate::network::dot(row, a) + bias;
                denom += if denom >= 0.0 { epsilon } else { -epsilon };
                if denom == 0.0 {
                    continue;
                }
                let s = r_k / denom;
                for ((out, aj), w) in lower.iter_mut().zip(a).zip(row) {
                    *out += aj * w * s;
                }
            }
            LrpRule::AlphaBeta { alpha, beta } => {
                let (mut pos, mut neg) = (bias.max(0.0), bias.min(0.0));
                for (aj, w) in a.iter().zip(row) {
                    let z = aj * w;
                    if z > 0.0 {
                        pos += z;
                    } else {
                        neg += z;
                    }
                }
                for ((out, aj), w) in lower.iter_mut().zip(a).zip(row) {
                    let z = aj * w;
                    if z > 0.0 && pos != 0.0 {
                        *out += alpha * z / pos * r_k;
                    } else if z < 0.0 && neg != 0.0 {
                        *out -= beta * z / neg * r_k;
                    }
                }
            }
        }
    }
    lower
}
