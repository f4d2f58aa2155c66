use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use super::TabularDataset;
use crate::{seed, Error, Result};

fn names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// `d` features i.i.d. uniform on `[0, 1]`; target is the row maximum.
pub fn gen_max(n: usize, d: usize, seed: u64) -> TabularDataset {
    assert!(n >= 1 && d >= 1, "gen_max needs n, d >= 1");
    let mut rng = seed::rng(seed);
    let features: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let targets = features.chunks(d).map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let mut data = TabularDataset::new(features, targets, names(d), "max units").expect("finite by construction");
    data.metadata.insert("generator".into(), "max".into());
    data.metadata.insert("feature_range".into(), "uniform [0, 1]".into());
    data
}

/// Noise level for [`gen_linear`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearNoise {
    /// Standard deviation as a fraction of the noiseless signal's std.
    RelativeToSignal(f64),
    Absolute(f64),
}

impl Default for LinearNoise {
    fn default() -> Self {
        LinearNoise::RelativeToSignal(0.01)
    }
}

/// Standard-normal features and `targets = X·w + ε`, where exactly
/// `informative` entries of `w` are nonzero (drawn from `100 · U(0, 1)` at
/// random positions). The generator weights are kept on the dataset.
pub fn gen_linear(n: usize, d: usize, informative: usize, noise: LinearNoise, seed: u64) -> Result<TabularDataset> {
    if n == 0 || d == 0 {
        return Err(Error::Config("gen_linear needs n, d >= 1".into()));
    }
    if informative > d {
        return Err(Error::Config(format!("informative = {informative} exceeds d = {d}")));
    }
    let mut rng = seed::rng(seed);
    let features: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let mut weights = vec![0.0; d];
    for j in sample(&mut rng, d, informative) {
        // open interval keeps every informative weight strictly nonzero
        weights[j] = 100.0 * rng.random_range(f64::EPSILON..1.0);
    }
    let signal: Vec<f64> = features.chunks(d).map(|row| row.iter().zip(&weights).map(|(x, w)| x * w).sum()).collect();
    let noise_std = match noise {
        LinearNoise::Absolute(s) => s,
        LinearNoise::RelativeToSignal(frac) => {
            let mean = signal.iter().sum::<f64>() / n as f64;
            let var = signal.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;
            frac * var.sqrt()
        }
    };
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::Config(format!("noise std must be >= 0, got {noise_std}")));
    }
    let targets = if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).expect("valid std");
        signal.iter().map(|s| s + normal.sample(&mut rng)).collect()
    } else {
        signal
    };
    let mut data = TabularDataset::new(features, targets, names(d), "linear units")?;
    data.metadata.insert("generator".into(), "linear".into());
    data.metadata.insert("noise_std".into(), format!("{noise_std}"));
    data.metadata.insert("weights".into(), format!("{weights:?}"));
    data.set_true_weights(weights);
    Ok(data)
}

/// Friedman #2: `sqrt(x1² + (x2·x3 − 1/(x2·x4))²) + ε` with
/// `x1 ∈ [0,100]`, `x2 ∈ [40π, 560π]`, `x3 ∈ [0,1]`, `x4 ∈ [1,11]`.
pub fn gen_friedman2(n: usize, noise_std: f64, seed: u64) -> TabularDataset {
    assert!(n >= 1, "gen_friedman2 needs n >= 1");
    let mut rng = seed::rng(seed);
    let ranges = [(0.0, 100.0), (40.0 * PI, 560.0 * PI), (0.0, 1.0), (1.0, 11.0)];
    let dists: Vec<Uniform<f64>> = ranges.iter().map(|&(lo, hi)| Uniform::new(lo, hi).expect("lo < hi")).collect();
    let mut features = Vec::with_capacity(4 * n);
    let mut targets = Vec::with_capacity(n);
    let normal = (noise_std > 0.0).then(|| Normal::new(0.0, noise_std).expect("valid std"));
    for _ in 0..n {
        let row: Vec<f64> = dists.iter().map(|u| u.sample(&mut rng)).collect();
        let mut t = friedman2(&row);
        if let Some(nd) = &normal {
            t += nd.sample(&mut rng);
        }
        features.extend(row);
        targets.push(t);
    }
    let mut data = TabularDataset::new(features, targets, names(4), "friedman units").expect("finite by construction");
    data.metadata.insert("generator".into(), "friedman2".into());
    data.metadata.insert("noise_std".into(), format!("{noise_std}"));
    data
}

pub(crate) fn friedman2(x: &[f64]) -> f64 {
    let inner = x[1] * x[2] - 1.0 / (x[1] * x[3]);
    (x[0] * x[0] + inner * inner).sqrt()
}
