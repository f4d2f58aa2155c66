#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use refxplain::network::{Activation, DenseNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..=scale)).collect()
}

/// Forward pass written out from the raw weights; returns the output and the
/// pre-activations of every layer.
pub fn forward(net: &DenseNetwork, x: &[f64]) -> (f64, Vec<Vec<f64>>) {
    let mut a = x.to_vec();
    let mut pre = Vec::new();
    for layer in net.layers() {
        let z: Vec<f64> = (0..layer.out_dim())
            .map(|k| layer.biases()[k] + (0..layer.in_dim()).map(|j| layer.weight(k, j) * a[j]).sum::<f64>())
            .collect();
        a = z
            .iter()
            .map(|&v| match layer.activation() {
                Activation::Relu => v.max(0.0),
                Activation::Identity => v,
            })
            .collect();
        pre.push(z);
    }
    (a[0], pre)
}

/// Shapley values by enumerating all subsets with the closed-form weights
/// `|S|!(d−|S|−1)!/d!`.
pub fn shapley_by_subsets(f: &dyn Fn(&[f64]) -> f64, x: &[f64], baseline: &[f64]) -> Vec<f64> {
    let d = x.len();
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let eval = |mask: usize| {
        let z: Vec<f64> = (0..d).map(|j| if mask >> j & 1 == 1 { x[j] } else { baseline[j] }).collect();
        f(&z)
    };
    let values: Vec<f64> = (0..1usize << d).map(eval).collect();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0..1usize << d {
            if mask >> i & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = fact(s) * fact(d - s - 1) / fact(d);
            *p += w * (values[mask | 1 << i] - values[mask]);
        }
    }
    phi
}
