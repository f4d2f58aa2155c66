//! Feature attribution methods.
//!
//! Every method returns an [`Explanation`]: one relevance score per input
//! feature, expressed in the model's output unit, together with the quantity
//! being explained (`prediction − reference_value`) and the conservation gap
//! left over after summing the scores.

mod clip;
mod gradient;
mod lrp;
mod shapley;

pub use clip::{clip_negative, clip_positive, ClipNegative, ClipPositive};
pub use gradient::{gradient_x_input, integrated_gradients, DEFAULT_IG_STEPS};
pub use lrp::{lrp, LrpConfig, LrpRule, DEFAULT_EPSILON};
pub use shapley::{shapley_exact, shapley_sampled, SHAPLEY_EXACT_MAX_DIM};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// Input-space reference point `x̃` for removal- and path-based methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Baseline(pub Vec<f64>);

impl Baseline {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn point(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn check(&self, dim: usize) -> Result<()> {
        if self.0.len() != dim {
            return Err(Error::InputShape { expected: dim, got: self.0.len() });
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("baseline contains a non-finite value".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_input(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::InputShape { expected: dim, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("input contains a non-finite value".into()));
    }
    Ok(())
}

/// Per-feature attribution of `prediction − reference_value`.
///
/// Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Explanation {
    pub method: String,
    pub params: BTreeMap<String, Value>,
    pub prediction: f64,
    pub reference_value: f64,
    pub unit: String,
    pub baseline: Option<Vec<f64>>,
    pub attributions: Vec<f64>,
    pub conservation_gap: f64,
    /// Per-feature standard errors, for sampling estimators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_errors: Option<Vec<f64>>,
}

impl Explanation {
    pub fn new(
        method: impl Into<String>,
        attributions: Vec<f64>,
        prediction: f64,
        reference_value: f64,
        unit: impl Into<String>,
    ) -> Self {
        let mut e = Self {
            method: method.into(),
            params: BTreeMap::new(),
            prediction,
            reference_value,
            unit: unit.into(),
            baseline: None,
            attributions,
            conservation_gap: 0.0,
            std_errors: None,
        };
        e.recompute_gap();
        e
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn with_baseline(mut self, baseline: &Baseline) -> Self {
        self.baseline = Some(baseline.0.clone());
        self
    }

    pub fn dim(&self) -> usize {
        self.attributions.len()
    }

    pub fn total(&self) -> f64 {
        self.attributions.iter().sum()
    }

    /// The explained quantity `prediction − reference_value`.
    pub fn target(&self) -> f64 {
        self.prediction - self.reference_value
    }

    pub fn recompute_gap(&mut self) {
        self.conservation_gap = self.target() - self.total();
    }

    /// Reinterpret the scores as explaining `prediction − reference_value`
    /// for new values of both, recomputing the gap.
    pub fn relabel(mut self, prediction: f64, reference_value: f64) -> Self {
        self.prediction = prediction;
        self.reference_value = reference_value;
        self.recompute_gap();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanations always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let e: Self = serde_json::from_str(text)?;
        if let Some(b) = &e.baseline {
            if b.len() != e.attributions.len() {
                return Err(Error::Format(format!(
                    "baseline has {} entries but there are {} attributions",
                    b.len(),
                    e.attributions.len()
                )));
            }
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_and_relabel() {
        let e = Explanation::new("x", vec![1.0, 2.0], 5.0, 1.0, "u");
        assert_eq!(e.conservation_gap, 1.0);
        let e = e.relabel(3.0, 0.0);
        assert_eq!(e.conservation_gap, 0.0);
    }

    #[test]
    fn json_key_order_is_stable() {
        let e = Explanation::new("lrp", vec![0.5, -0.25], 1.0, 0.75, "eV")
            .with_param("gamma", 2.5)
            .with_baseline(&Baseline::zeros(2));
        let text = e.to_json();
        let keys = [
            "\"method\"",
            "\"params\"",
            "\"prediction\"",
            "\"reference_value\"",
            "\"unit\"",
            "\"baseline\"",
            "\"attributions\"",
            "\"conservation_gap\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert_eq!(Explanation::from_json(&text).unwrap(), e);
    }

    #[test]
    fn json_floats_round_trip_exactly() {
        let e = Explanation::new("m", vec![0.1 + 0.2, 1.0 / 3.0, -1e-300], std::f64::consts::PI, 0.0, "u");
        let back = Explanation::from_json(&e.to_json()).unwrap();
        for (a, b) in e.attributions.iter().zip(&back.attributions) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.prediction.to_bits(), e.prediction.to_bits());
    }
}
