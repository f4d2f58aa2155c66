//! Shapley values of a model's features, with absent features set to the
//! baseline's coordinates.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{check_input, Baseline, Explanation};
use crate::model::Model;
use crate::{seed, Error, Result};

/// Largest input dimension for which exact enumeration is attempted.
pub const SHAPLEY_EXACT_MAX_DIM: usize = 20;

/// Permutations per independently seeded block in [`shapley_sampled`].
const BLOCK: usize = 32;

fn blend(x: &[f64], base: &[f64], mask: u64) -> Vec<f64> {
    x.iter().zip(base).enumerate().map(|(i, (xi, bi))| if mask >> i & 1 == 1 { *xi } else { *bi }).collect()
}

/// Exact Shapley values by enumerating all `2^d` coalitions.
///
/// The explanation's reference value is `f(baseline)`, so a zero conservation
/// gap is the efficiency property `Σ φ_i = f(x) − f(x̃)`.
pub fn shapley_exact<M: Model>(f: &M, x: &[f64], baseline: &Baseline) -> Result<Explanation> {
    let d = f.input_dim();
    if d > SHAPLEY_EXACT_MAX_DIM {
        return Err(Error::TooManyFeatures { dim: d, limit: SHAPLEY_EXACT_MAX_DIM });
    }
    check_input(x, d)?;
    baseline.check(d)?;
    let base = baseline.point();
    let n_masks = 1u64 << d;
    let values: Vec<f64> = (0..n_masks).into_par_iter().map(|m| f.eval(&blend(x, base, m))).collect();

    // weight for a coalition of size s not containing i: s!(d-s-1)!/d! = 1 / (d · C(d-1, s))
    let mut weights = vec![0.0; d];
    let mut binom = 1.0f64;
    for (s, w) in weights.iter_mut().enumerate() {
        *w = 1.0 / (d as f64 * binom);
        binom = binom * (d - 1 - s) as f64 / (s + 1) as f64;
    }

    let phi: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|i| {
            let bit = 1u64 << i;
            let mut acc = 0.0;
            for m in 0..n_masks {
                if m & bit == 0 {
                    let s = m.count_ones() as usize;
                    acc += weights[s] * (values[(m | bit) as usize] - values[m as usize]);
                }
            }
            acc
        })
        .collect();
    let fx = values[(n_masks - 1) as usize];
    let fb = values[0];
    Ok(Explanation::new("shapley", phi, fx, fb, f.output_unit()).with_baseline(baseline))
}

/// Marginal contributions along one feature ordering, added into `acc`
/// (and their squares into `acc_sq`).
fn walk<M: Model>(f: &M, x: &[f64], base: &[f64], order: &[usize], acc: &mut [f64], acc_sq: &mut [f64]) {
    let mut point = base.to_vec();
    let mut prev = f.eval(&point);
    for &i in order {
        point[i] = x[i];
        let cur = f.eval(&point);
        let delta = cur - prev;
        acc[i] += delta;
        acc_sq[i] += delta * delta;
        prev = cur;
    }
}

fn factorial(d: usize) -> Option<usize> {
    (1..=d).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

/// Advance `perm` to the next permutation in lexicographic order; false when
/// `perm` was the last one.
fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(i) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = perm.iter().rposition(|&v| v > perm[i]).expect("pivot has a larger successor");
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

/// Permutation-sampling Shapley estimator with per-feature standard errors.
///
/// Permutations are drawn in blocks whose seeds derive from `seed` and the
/// block index, so results do not depend on thread scheduling. When
/// `n_permutations` equals `d!`, every ordering is visited exactly once
/// instead and the result is exact (standard errors zero).
pub fn shapley_sampled<M: Model>(
    f: &M,
    x: &[f64],
    baseline: &Baseline,
    n_permutations: usize,
    seed: u64,
) -> Result<Explanation> {
    let d = f.input_dim();
    check_input(x, d)?;
    baseline.check(d)?;
    if n_permutations == 0 {
        return Err(Error::Config("sampled Shapley needs at least one permutation".into()));
    }
    let base = baseline.point();
    let n = n_permutations as f64;

    if factorial(d) == Some(n_permutations) {
        let mut acc = vec![0.0; d];
        let mut acc_sq = vec![0.0; d];
        let mut perm: Vec<usize> = (0..d).collect();
        loop {
            walk(f, x, base, &perm, &mut acc, &mut acc_sq);
            if !next_permutation(&mut perm) {
                break;
            }
        }
        let phi = acc.iter().map(|a| a / n).collect();
        let mut e = Explanation::new("shapley_sampled", phi, f.eval(x), f.eval(base), f.output_unit())
            .with_baseline(baseline)
            .with_param("n_permutations", n_permutations)
            .with_param("seed", seed)
            .with_param("exhaustive", true);
        e.std_errors = Some(vec![0.0; d]);
        return Ok(e);
    }

    let n_blocks = n_permutations.div_ceil(BLOCK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::rng(seed::derive(seed, &["shapley-block".into(), b.into()]));
            let count = BLOCK.min(n_permutations - b * BLOCK);
            let mut acc = vec![0.0; d];
            let mut acc_sq = vec![0.0; d];
            let mut order: Vec<usize> = (0..d).collect();
            for _ in 0..count {
                order.shuffle(&mut rng);
                walk(f, x, base, &order, &mut acc, &mut acc_sq);
            }
            (acc, acc_sq)
        })
        .collect();
    let mut acc = vec![0.0; d];
    let mut acc_sq = vec![0.0; d];
    for (a, s) in &partials {
        acc.iter_mut().zip(a).for_each(|(t, v)| *t += v);
        acc_sq.iter_mut().zip(s).for_each(|(t, v)| *t += v);
    }
    let phi: Vec<f64> = acc.iter().map(|a| a / n).collect();
    let std_errors = (n_permutations > 1).then(|| {
        phi.iter()
            .zip(&acc_sq)
            .map(|(m, sq)| {
                let var = ((sq - n * m * m) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    });
    let mut e = Explanation::new("shapley_sampled", phi, f.eval(x), f.eval(base), f.output_unit())
        .with_baseline(baseline)
        .with_param("n_permutations", n_permutations)
        .with_param("seed", seed)
        .with_param("exhaustive", false);
    e.std_errors = std_errors;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::clip_positive;
    use crate::model::FnModel;
    use crate::network::build_max_network;

    #[test]
    fn auction_clipped_shapley() {
        let net = build_max_network();
        let g = clip_positive(&net, 1000.0);
        let e = shapley_exact(&g, &[1100.0, 900.0], &Baseline(vec![1000.0, 1000.0])).unwrap();
        assert_eq!(e.attributions, vec![100.0, 0.0]);
        assert_eq!(e.unit, "monetary units");
    }

    #[test]
    fn additive_and_symmetric_cases() {
        let add = FnModel::new(2, |x: &[f64]| x[0] + x[1]);
        let e = shapley_exact(&add, &[2.0, 3.0], &Baseline::zeros(2)).unwrap();
        assert_eq!(e.attributions, vec![2.0, 3.0]);
        let max = FnModel::new(2, |x: &[f64]| x[0].max(x[1]));
        let e = shapley_exact(&max, &[5.0, 5.0], &Baseline::zeros(2)).unwrap();
        assert_eq!(e.attributions, vec![2.5, 2.5]);
    }

    #[test]
    fn refuses_large_inputs() {
        let f = FnModel::new(25, |x: &[f64]| x.iter().sum());
        let err = shapley_exact(&f, &[0.0; 25], &Baseline::zeros(25)).unwrap_err();
        assert!(matches!(err, Error::TooManyFeatures { dim: 25, .. }));
        assert!(err.to_string().contains("shapley-sampled"));
    }

    #[test]
    fn exhaustive_permutations_match_exact() {
        let f = FnModel::new(4, |x: &[f64]| x[0] * x[1] + x[2].max(x[3]) - x[0] * x[2] * x[3]);
        let x = [1.5, -2.0, 0.7, 3.0];
        let base = Baseline(vec![0.1, 0.2, -0.3, 0.4]);
        let exact = shapley_exact(&f, &x, &base).unwrap();
        let sampled = shapley_sampled(&f, &x, &base, 24, 0).unwrap();
        for (a, b) in exact.attributions.iter().zip(&sampled.attributions) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(sampled.std_errors.unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn additive_is_exact_for_a_single_permutation() {
        let f = FnModel::new(3, |x: &[f64]| 2.0 * x[0] - x[1] + 0.5 * x[2]);
        let e = shapley_sampled(&f, &[1.0, 2.0, 3.0], &Baseline::zeros(3), 1, 99).unwrap();
        assert_eq!(e.attributions, vec![2.0, -2.0, 1.5]);
        assert!(e.std_errors.is_none());
    }

    #[test]
    fn next_permutation_visits_all_orderings() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }
}
