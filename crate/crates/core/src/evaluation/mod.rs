//! Scoring explanations against a Shapley oracle on the clipped function
//! `g⁺(x) = max(0, f(x) − ỹ)`, and the benchmark built on it.

mod benchmark;
mod report;

pub use benchmark::{run_benchmark, run_benchmark_with, BenchmarkConfig, BenchmarkHooks, DatasetSpec, Method};
pub use report::{Aggregate, BenchmarkReport, ModelRecord, Provenance, RepeatRecord};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attribution::{clip_positive, shapley_exact, Baseline, Explanation};
use crate::datasets::TabularDataset;
use crate::network::DenseNetwork;
use crate::{seed, Error, Result};

pub const DEFAULT_QS: [f64; 3] = [0.25, 0.5, 0.75];
pub const DEFAULT_K_RANDOM: usize = 100;

/// Reference values `ỹ_q = q·f_max + (1 − q)·f(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrid {
    pub q_values: Vec<f64>,
    pub f_max: f64,
    pub f_zero: f64,
}

impl ReferenceGrid {
    pub fn reference(&self, q: f64) -> f64 {
        q * self.f_max + (1.0 - q) * self.f_zero
    }

    /// `(q, ỹ_q)` pairs in grid order.
    pub fn references(&self) -> Vec<(f64, f64)> {
        self.q_values.iter().map(|&q| (q, self.reference(q))).collect()
    }
}

/// `f_max` is the largest prediction over `data`; `f(0)` is taken at the
/// origin of the (standardized) input space.
pub fn reference_grid(net: &DenseNetwork, data: &TabularDataset, qs: &[f64]) -> Result<ReferenceGrid> {
    if data.dim() != net.input_dim() {
        return Err(Error::InputShape { expected: net.input_dim(), got: data.dim() });
    }
    if let Some(q) = qs.iter().find(|q| !q.is_finite()) {
        return Err(Error::Config(format!("grid fraction {q} is not finite")));
    }
    let f_max = (0..data.len()).map(|i| net.predict_unchecked(data.row(i))).fold(f64::NEG_INFINITY, f64::max);
    let f_zero = net.predict_unchecked(&vec![0.0; net.input_dim()]);
    Ok(ReferenceGrid { q_values: qs.to_vec(), f_max, f_zero })
}

/// Which clipped function the instances must suit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipSide {
    /// `0 ≤ ỹ ≤ f(x)`.
    Positive,
    /// `f(x) ≤ ỹ ≤ 0`.
    Negative,
}

/// Zero-based indices of the rows of `data` for which clipping at `ỹ` is applicable.
pub fn filter_instances(net: &DenseNetwork, data: &TabularDataset, reference: f64, side: ClipSide) -> Vec<usize> {
    (0..data.len())
        .filter(|&i| {
            let y = net.predict_unchecked(data.row(i));
            match side {
                ClipSide::Positive => 0.0 <= reference && reference <= y,
                ClipSide::Negative => y <= reference && reference <= 0.0,
            }
        })
        .collect()
}

/// Exact Shapley values of `g⁺ = max(0, f − ỹ)` at `x`, baseline the origin.
pub fn reference_explanation(net: &DenseNetwork, x: &[f64], reference: f64) -> Result<Explanation> {
    let g = clip_positive(net, reference);
    let mut e = shapley_exact(&g, x, &Baseline::zeros(net.input_dim()))?;
    e.method = "shapley_clip_positive".into();
    Ok(e.with_param("reference_value", reference))
}

pub(crate) fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// `d` attributions summing to `total`: `total · u / Σu` with `u` uniform on
/// `(0, 1]^d`.
pub fn random_attribution(d: usize, total: f64, rng: &mut seed::Rng) -> Vec<f64> {
    let u: Vec<f64> = (0..d).map(|_| 1.0 - rng.random::<f64>()).collect();
    let sum: f64 = u.iter().sum();
    u.iter().map(|v| total * v / sum).collect()
}

/// Mean over `k` seeded random attributions (each summing to `total`) of
/// their MSE against `reference`.
pub fn random_mse(reference: &[f64], total: f64, k: usize, seed: u64) -> Result<f64> {
    let d = reference.len();
    if d < 2 {
        return Err(Error::UndefinedMetric("random attributions are forced when d = 1".into()));
    }
    if k == 0 {
        return Err(Error::Config("k_random must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    Ok((0..k).map(|_| mse(&random_attribution(d, total, &mut rng), reference)).sum::<f64>() / k as f64)
}

/// `MSE(R, R_ref)` divided by the mean MSE of `k_random` random
/// attributions that sum to `y − ỹ`. A value of 1 is as good as chance.
pub fn normalized_mse(
    r: &Explanation,
    r_ref: &Explanation,
    y: f64,
    reference: f64,
    k_random: usize,
    seed: u64,
) -> Result<f64> {
    if r.dim() != r_ref.dim() {
        return Err(Error::InputShape { expected: r_ref.dim(), got: r.dim() });
    }
    let denom = random_mse(&r_ref.attributions, y - reference, k_random, seed)?;
    if !(denom > 0.0) {
        return Err(Error::UndefinedMetric("random attributions match the reference exactly".into()));
    }
    Ok(mse(&r.attributions, &r_ref.attributions) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_max_network;

    #[test]
    fn grid_endpoints_and_midpoint() {
        let g = ReferenceGrid { q_values: vec![0.0, 0.5, 1.0], f_max: 2.0, f_zero: 0.3 };
        assert_eq!(g.reference(0.0), 0.3);
        assert_eq!(g.reference(1.0), 2.0);
        let g = ReferenceGrid { q_values: vec![0.5], f_max: 2.0, f_zero: 0.0 };
        assert_eq!(g.references(), vec![(0.5, 1.0)]);
    }

    #[test]
    fn filter_windows() {
        let net = build_max_network();
        // predictions 0.2, 0.8, 1.5
        let data =
            TabularDataset::new(vec![0.2, 0.0, 0.8, 0.0, 1.5, 0.0], vec![0.0; 3], vec!["a".into(), "b".into()], "u")
                .unwrap();
        assert_eq!(filter_instances(&net, &data, 0.5, ClipSide::Positive), vec![1, 2]);
        assert!(filter_instances(&net, &data, -0.1, ClipSide::Positive).is_empty());
        assert_eq!(filter_instances(&net, &data, 0.0, ClipSide::Positive), vec![0, 1, 2]);
        assert!(filter_instances(&net, &data, 0.0, ClipSide::Negative).is_empty());
    }

    #[test]
    fn self_score_is_zero() {
        let e = Explanation::new("x", vec![1.0, 0.0, 2.0], 3.0, 0.0, "u");
        assert_eq!(normalized_mse(&e, &e, 3.0, 0.0, 100, 1).unwrap(), 0.0);
        let one = Explanation::new("x", vec![1.0], 1.0, 0.0, "u");
        assert!(matches!(normalized_mse(&one, &one, 1.0, 0.0, 10, 1), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn random_attributions_sum_to_total() {
        let mut rng = seed::rng(3);
        for total in [0.0, 1.0, -2.5, 100.0] {
            let r = random_attribution(7, total, &mut rng);
            assert!((r.iter().sum::<f64>() - total).abs() < 1e-9 * total.abs().max(1.0));
            assert!(r.iter().all(|v| v * total >= 0.0));
        }
    }

    #[test]
    fn reference_explanation_on_auction_scale() {
        let net = build_max_network();
        let e = reference_explanation(&net, &[1100.0, 900.0], 1000.0).unwrap();
        // baseline is the origin: g⁺(0) = 0, so efficiency gives Σ = 100
        assert!((e.total() - 100.0).abs() < 1e-9);
    }
}
