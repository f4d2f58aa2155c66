//! Explanations relative to a reference value `ỹ`.
//!
//! Four ways to make an explainer that is anchored at zero output produce
//! attributions for `f(x) − ỹ` instead:
//!
//! * [`restructure`] rewrites the last hidden layer so the network computes
//!   `f(x) − ỹ` exactly, with zero output bias, and LRP is applied unchanged;
//! * [`retrain()`] fine-tunes a copy on the shifted teacher outputs;
//! * [`baseline_shift`] and [`baseline_scale`] post-process a plain explanation.

mod flood;
mod retrain;

pub use flood::{flood_reference, FloodMode, FloodSolution, ASYMMETRIC_POSITIVE_FACTOR};
pub use retrain::{retrain, RetrainConfig, RetrainOutcome};

use serde::{Deserialize, Serialize};

use crate::attribution::Explanation;
use crate::network::{Activation, DenseLayer, DenseNetwork, RestructureMetadata};
use crate::{seed, Error, Result};

/// How a reference value was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceOrigin {
    Absolute,
    /// `ỹ = q·f_max + (1 − q)·f(0)` over some dataset.
    GridFraction {
        q: f64,
    },
}

/// A reference value `ỹ` in the model's output unit, with its origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub value: f64,
    pub origin: ReferenceOrigin,
}

impl ReferenceSpec {
    pub fn absolute(value: f64) -> Result<Self> {
        Self::checked(value, ReferenceOrigin::Absolute)
    }

    pub fn grid_fraction(value: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("grid fraction q must lie in [0, 1], got {q}")));
        }
        Self::checked(value, ReferenceOrigin::GridFraction { q })
    }

    fn checked(value: f64, origin: ReferenceOrigin) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Config(format!("reference value must be finite, got {value}")));
        }
        Ok(Self { value, origin })
    }
}

/// Copy of `net` whose output is `f(x) − ỹ` (the output bias is lowered by `ỹ`).
pub fn shift_output(net: &DenseNetwork, reference: f64) -> DenseNetwork {
    let mut out = net.clone();
    out.top_mut().biases[0] -= reference;
    out
}

/// Stable identifier of an input vector, derived from its bit pattern.
pub fn input_hash(x: &[f64]) -> String {
    let parts: Vec<seed::Part> = x.iter().map(|v| seed::Part::Int(v.to_bits())).collect();
    format!("{:016x}", seed::derive(x.len() as u64, &parts))
}

/// Replace each unit `a_j = ρ(z_j)` of a ReLU layer by three units
/// `ρ(z_j − ã_j)`, `ρ(−z_j)`, `ρ(−z_j + ã_j)` and recombine them with
/// outgoing weights `(v_j, v_j, −v_j)`. For `ã_j ≥ 0` the three terms sum to
/// `ρ(z_j) − ã_j`, so the downstream pre-activation drops by `Σ_j v_j ã_j`.
///
/// Returns the new layer (3× wider, units grouped per original unit) and the
/// new outgoing weight row.
pub fn triplicate_relu(layer: &DenseLayer, outgoing: &[f64], a_tilde: &[f64]) -> Result<(DenseLayer, Vec<f64>)> {
    let h = layer.out_dim();
    if layer.activation() != Activation::Relu {
        return Err(Error::Structure("only ReLU layers can be triplicated".into()));
    }
    if outgoing.len() != h || a_tilde.len() != h {
        return Err(Error::InputShape { expected: h, got: outgoing.len().min(a_tilde.len()) });
    }
    if a_tilde.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Precondition("reference activations must be nonnegative".into()));
    }
    let n_in = layer.in_dim();
    let mut weights = Vec::with_capacity(3 * h * n_in);
    let mut biases = Vec::with_capacity(3 * h);
    let mut top = Vec::with_capacity(3 * h);
    for j in 0..h {
        let row = layer.row(j);
        let b = layer.biases()[j];
        let at = a_tilde[j];
        weights.extend_from_slice(row);
        weights.extend(row.iter().map(|w| -w));
        weights.extend(row.iter().map(|w| -w));
        biases.extend([b - at, -b, -b + at]);
        top.extend([outgoing[j], outgoing[j], -outgoing[j]]);
    }
    let new = DenseLayer::new(n_in, 3 * h, weights, biases, Activation::Relu)?;
    Ok((new, top))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Restructured {
    pub network: DenseNetwork,
    pub flood: FloodSolution,
    pub metadata: RestructureMetadata,
}

/// Rewrite `net` into a network that computes `f(x') − ỹ` for every input
/// `x'`, with the reference activations `ã` flooded at the anchor `x`.
///
/// The output bias is absorbed into the flooding target and the new output
/// layer carries no bias, so bias-free LRP rules conserve `f(x) − ỹ`.
pub fn restructure(net: &DenseNetwork, x: &[f64], reference: f64, mode: FloodMode) -> Result<Restructured> {
    let n = net.layers().len();
    if n < 2 {
        return Err(Error::Structure("network has no hidden ReLU layer to restructure".into()));
    }
    let trace = net.forward(x)?;
    let a = &trace.activations[n - 1];
    let top = net.top();
    let flood = flood_reference(a, top.row(0), top.biases()[0], reference, mode)?;
    if flood.residual > 1e-8 * reference.abs().max(1.0) {
        return Err(Error::Precondition(format!("flooding residual {} exceeds tolerance", flood.residual)));
    }
    let (hidden, top_row) = triplicate_relu(&net.layers()[n - 2], top.row(0), &flood.a_tilde)?;
    let new_top = DenseLayer::new(top_row.len(), 1, top_row, vec![0.0], Activation::Identity)?;
    let mut layers = net.layers()[..n - 2].to_vec();
    layers.push(hidden);
    layers.push(new_top);
    let network = DenseNetwork::new(layers, net.output_unit())?;
    let metadata = RestructureMetadata {
        reference_value: reference,
        anchor_input_hash: input_hash(x),
        flood_t: flood.t,
        mode: mode.label().to_string(),
    };
    Ok(Restructured { network, flood, metadata })
}

/// `R'_i = R_i − ỹ/d`: spreads the reference value evenly over the features.
pub fn baseline_shift(expl: &Explanation, reference: f64) -> Explanation {
    let d = expl.dim() as f64;
    let mut out = expl.clone();
    out.attributions.iter_mut().for_each(|r| *r -= reference / d);
    out.method = format!("baseline_shift({})", expl.method);
    out.reference_value = expl.reference_value + reference;
    out.recompute_gap();
    out
}

/// `R'_i = R_i · (y − ỹ) / y`, where `y` is the prediction.
pub fn baseline_scale(expl: &Explanation, reference: f64) -> Result<Explanation> {
    let y = expl.prediction;
    if y.abs() < 1e-12 {
        return Err(Error::Division(format!("cannot rescale an explanation of prediction {y}")));
    }
    let factor = (y - reference) / y;
    let mut out = expl.clone();
    out.attributions.iter_mut().for_each(|r| *r *= factor);
    out.method = format!("baseline_scale({})", expl.method);
    out.reference_value = reference;
    out.recompute_gap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{lrp, LrpConfig, LrpRule};
    use crate::network::build_max_network;

    #[test]
    fn auction_restructure_matches_shifted_function() {
        let net = build_max_network();
        let r = restructure(&net, &[1100.0, 900.0], 1000.0, FloodMode::Symmetric).unwrap();
        assert_eq!(r.flood.t, 100.0);
        assert_eq!(r.network.layers()[0].out_dim(), 9);
        for x in [[1100.0, 900.0], [0.0, 0.0], [-5.0, 30.0], [2000.0, 2500.0]] {
            let want = net.predict(&x).unwrap() - 1000.0;
            assert!((r.network.predict(&x).unwrap() - want).abs() < 1e-9);
        }
        assert_eq!(r.metadata.flood_t, 100.0);
        assert_eq!(r.metadata.mode, "symmetric");
    }

    #[test]
    fn restructured_lrp_conserves_shifted_output() {
        let net = build_max_network();
        let x = [1100.0, 900.0];
        let r = restructure(&net, &x, 1000.0, FloodMode::Symmetric).unwrap();
        let e = lrp(&r.network, &x, &LrpConfig::uniform(LrpRule::gamma(0.0), 2, true)).unwrap();
        assert!((e.total() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn single_layer_is_refused() {
        let l = DenseLayer::new(2, 1, vec![1.0, 1.0], vec![0.0], Activation::Identity).unwrap();
        let net = DenseNetwork::new(vec![l], "u").unwrap();
        let err = restructure(&net, &[1.0, 1.0], 0.5, FloodMode::Symmetric).unwrap_err();
        assert!(matches!(err, Error::Structure(_)));
    }

    #[test]
    fn triplication_identity_on_a_grid() {
        let relu = |v: f64| v.max(0.0);
        for zi in -40..=40 {
            let z = zi as f64 * 0.25;
            for ai in 0..=20 {
                let at = ai as f64 * 0.5;
                let lhs = relu(z - at) + relu(-z) - relu(-z + at);
                assert!((lhs - (relu(z) - at)).abs() < 1e-12, "z={z} ã={at}");
            }
        }
    }

    #[test]
    fn shift_and_scale_baselines() {
        let e = Explanation::new("lrp", vec![3.0, 1.0], 4.0, 0.0, "u");
        let s = baseline_shift(&e, 2.0);
        assert_eq!(s.attributions, vec![2.0, 0.0]);
        assert_eq!(s.reference_value, 2.0);
        assert_eq!(s.conservation_gap, 0.0);
        let s = baseline_scale(&e, 2.0).unwrap();
        assert_eq!(s.attributions, vec![1.5, 0.5]);
        assert_eq!(s.conservation_gap, 0.0);
        assert_eq!(baseline_shift(&e, 0.0).attributions, e.attributions);
        assert_eq!(baseline_scale(&e, 0.0).unwrap().attributions, e.attributions);
        let zero = Explanation::new("lrp", vec![0.0, 0.0], 0.0, 0.0, "u");
        assert!(matches!(baseline_scale(&zero, 1.0), Err(Error::Division(_))));
    }

    #[test]
    fn shift_output_lowers_bias() {
        let net = build_max_network();
        let s = shift_output(&net, 10.0);
        assert_eq!(s.predict(&[3.0, 1.0]).unwrap(), 3.0 - 10.0);
    }

    #[test]
    fn reference_spec_checks() {
        assert!(ReferenceSpec::absolute(f64::NAN).is_err());
        assert!(ReferenceSpec::grid_fraction(1.0, 1.5).is_err());
        let r = ReferenceSpec::grid_fraction(0.7, 0.5).unwrap();
        assert_eq!(r.origin, ReferenceOrigin::GridFraction { q: 0.5 });
        assert_eq!(ReferenceSpec::absolute(1000.0).unwrap().value, 1000.0);
    }

    #[test]
    fn input_hash_is_bitwise() {
        assert_eq!(input_hash(&[1.0, 2.0]), input_hash(&[1.0, 2.0]));
        assert_ne!(input_hash(&[0.0]), input_hash(&[-0.0]));
        assert_ne!(input_hash(&[1.0, 2.0]), input_hash(&[2.0, 1.0]));
    }
}
