//! Sanity checks that every build should pass: conservation, the reduction of
//! LRP-0 to Gradient×Input, the triplication identity and functional
//! equivalence of restructured networks.

use std::fmt::Write as _;

use rand::Rng as _;
use serde::Serialize;

use crate::attribution::{gradient_x_input, integrated_gradients, lrp, shapley_exact, Baseline, LrpConfig, LrpRule};
use crate::network::{DenseLayer, DenseNetwork};
use crate::refvalue::{restructure, FloodMode};
use crate::{seed, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Largest deviation seen, compared against `tolerance`.
    pub max_error: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfcheckReport {
    pub checks: Vec<CheckResult>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Plain-text pass/fail table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<26} {:>6} {:>7} {:>12} {:>10}\n", "check", "result", "cases", "max error", "tolerance");
        for c in &self.checks {
            writeln!(
                s,
                "{:<26} {:>6} {:>7} {:>12.3e} {:>10.0e}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.cases,
                c.max_error,
                c.tolerance
            )
            .unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfcheckOptions {
    pub seed: u64,
    pub conservation_nets: usize,
    pub reduction_nets: usize,
    pub restructure_nets: usize,
    pub restructure_points: usize,
    /// Negative control: give the hidden layer of every conservation net a
    /// nonzero bias, which must make the conservation check fail.
    #[doc(hidden)]
    pub inject_bias: bool,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self {
            seed: 0x5e1f,
            conservation_nets: 50,
            reduction_nets: 20,
            restructure_nets: 20,
            restructure_points: 1000,
            inject_bias: false,
        }
    }
}

pub fn run_selfcheck(opts: &SelfcheckOptions) -> Result<SelfcheckReport> {
    Ok(SelfcheckReport {
        checks: vec![conservation(opts)?, reduction(opts)?, triplication_identity(), restructure_equivalence(opts)?],
    })
}

fn point(rng: &mut seed::Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..=scale)).collect()
}

fn check(name: &'static str, errors: &[f64], tolerance: f64, detail: String) -> CheckResult {
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    let passed = errors.iter().all(|e| *e <= tolerance);
    CheckResult { name, passed, max_error, tolerance, cases: errors.len(), detail }
}

/// LRP on bias-free nets (biases taking part in the propagation) sums to
/// `f(x)`; exact Shapley and integrated gradients sum to `f(x) − f(0)`;
/// LRP on a restructured net sums to `f(x) − ỹ`.
fn conservation(opts: &SelfcheckOptions) -> Result<CheckResult> {
    let mut errors = Vec::new();
    let mut rng = seed::rng(seed::derive(opts.seed, &["conservation".into()]));
    for n in 0..opts.conservation_nets {
        let d = 4 + n % 10;
        let mut net =
            DenseNetwork::init(&[d, 16, 1], "u", seed::derive(opts.seed, &["conservation".into(), n.into()]))?;
        if opts.inject_bias {
            net = with_hidden_bias(&net, 0.5)?;
        }
        let x = point(&mut rng, d, 1.0);
        let y = net.predict(&x)?;
        let zero = Baseline::zeros(d);
        let f0 = net.predict(zero.point())?;
        for gamma in [0.0, 0.25, 2.5] {
            let e = lrp(&net, &x, &LrpConfig::uniform(LrpRule::gamma(gamma), 2, false))?;
            errors.push((e.total() - y).abs());
        }
        errors.push((shapley_exact(&net, &x, &zero)?.total() - (y - f0)).abs());
        errors.push((integrated_gradients(&net, &x, &zero, 128)?.total() - (y - f0)).abs());
        if y > 0.0 {
            let reference = 0.5 * y;
            let r = restructure(&net, &x, reference, FloodMode::Symmetric)?;
            let e = lrp(&r.network, &x, &LrpConfig::uniform(LrpRule::gamma(0.0), 2, true))?;
            errors.push((e.total() - (y - reference)).abs());
        }
    }
    Ok(check("conservation", &errors, 1e-9, "sum of attributions vs. f(x) - reference".into()))
}

fn with_hidden_bias(net: &DenseNetwork, b: f64) -> Result<DenseNetwork> {
    let mut layers = net.layers().to_vec();
    let h = &layers[0];
    layers[0] = DenseLayer::new(h.in_dim(), h.out_dim(), h.weights().to_vec(), vec![b; h.out_dim()], h.activation())?;
    DenseNetwork::new(layers, net.output_unit())
}

/// LRP with γ = 0 (biases in the denominator) equals Gradient×Input.
fn reduction(opts: &SelfcheckOptions) -> Result<CheckResult> {
    let mut errors = Vec::new();
    let mut rng = seed::rng(seed::derive(opts.seed, &["reduction".into()]));
    for n in 0..opts.reduction_nets {
        let d = 2 + n % 12;
        let net = DenseNetwork::init_with_biases(
            &[d, 24, 1],
            "u",
            seed::derive(opts.seed, &["reduction".into(), n.into()]),
            0.3,
        )?;
        let x = point(&mut rng, d, 1.0);
        let a = lrp(&net, &x, &LrpConfig::uniform(LrpRule::gamma(0.0), 2, false))?;
        let b = gradient_x_input(&net, &x)?;
        errors.extend(a.attributions.iter().zip(&b.attributions).map(|(p, q)| (p - q).abs()));
    }
    Ok(check("lrp0_equals_grad_x_input", &errors, 1e-9, "per-feature |LRP-0 - GxI|".into()))
}

/// `ρ(z − ã) + ρ(−z) − ρ(−z + ã) = ρ(z) − ã` for `ã ≥ 0`.
fn triplication_identity() -> CheckResult {
    let relu = |v: f64| v.max(0.0);
    let mut errors = Vec::new();
    for zi in -40..=40 {
        let z = zi as f64 * 0.25;
        for ai in 0..=20 {
            let a = ai as f64 * 0.25;
            errors.push(((relu(z - a) + relu(-z) - relu(-z + a)) - (relu(z) - a)).abs());
        }
    }
    check("triplication_identity", &errors, 0.0, "z in [-10, 10], a in [0, 5], step 0.25".into())
}

/// Restructured networks compute `f(·) − ỹ` everywhere, not only at the anchor.
fn restructure_equivalence(opts: &SelfcheckOptions) -> Result<CheckResult> {
    let mut errors = Vec::new();
    let mut rng = seed::rng(seed::derive(opts.seed, &["restructure".into()]));
    let mut built = 0;
    let mut n = 0u64;
    while built < opts.restructure_nets {
        let d = 2 + (n as usize) % 8;
        let net = DenseNetwork::init_with_biases(
            &[d, 32, 1],
            "u",
            seed::derive(opts.seed, &["restructure".into(), n.into()]),
            0.3,
        )?;
        n += 1;
        let x = point(&mut rng, d, 1.0);
        let y = net.predict(&x)?;
        let reference = y - rng.random_range(0.0..=y.abs().max(0.1));
        let Ok(r) = restructure(&net, &x, reference, FloodMode::Symmetric) else {
            continue;
        };
        built += 1;
        for _ in 0..opts.restructure_points {
            let p = point(&mut rng, d, 3.0);
            let want = net.predict(&p)? - reference;
            let scale = want.abs().max(1.0);
            errors.push((r.network.predict(&p)? - want).abs() / scale);
        }
    }
    Ok(check(
        "restructure_equivalence",
        &errors,
        1e-9,
        format!("{built} restructured nets ({} attempts), random points in [-3, 3]^d", n),
    ))
}
