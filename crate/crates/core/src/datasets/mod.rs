//! Tabular regression data: synthetic generators, CSV ingestion, and the
//! standardize / min-max target scaling applied before training.

mod csv_io;
mod generators;

pub use csv_io::{boston, diabetes, load_csv, parse_csv};
pub use generators::{gen_friedman2, gen_linear, gen_max, LinearNoise};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

/// Per-feature z-scoring parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl FeatureScaling {
    /// Fit means and population standard deviations column by column.
    pub fn fit(data: &TabularDataset) -> Result<Self> {
        let (n, d) = (data.len(), data.dim());
        let mut means = vec![0.0; d];
        for i in 0..n {
            for (m, v) in means.iter_mut().zip(data.row(i)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut stds = vec![0.0; d];
        for i in 0..n {
            for ((s, v), m) in stds.iter_mut().zip(data.row(i)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for (j, s) in stds.iter_mut().enumerate() {
            *s = (*s / n as f64).sqrt();
            if !(*s > 0.0) {
                return Err(Error::ConstantFeature(data.feature_names[j].clone()));
            }
        }
        Ok(Self { means, stds })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.means).zip(&self.stds).map(|((v, m), s)| v * s + m).collect()
    }
}

/// Affine map from `[t_min, t_max]` onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaling {
    pub t_min: f64,
    pub t_max: f64,
}

impl TargetScaling {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::ConstantTarget);
        }
        Ok(Self { t_min, t_max })
    }

    pub fn fit(targets: &[f64]) -> Result<Self> {
        let t_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let t_max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(t_min, t_max)
    }

    pub fn apply(&self, t: f64) -> f64 {
        (t - self.t_min) / (self.t_max - self.t_min)
    }

    pub fn invert(&self, s: f64) -> f64 {
        s * (self.t_max - self.t_min) + self.t_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    features: Vec<f64>,
    targets: Vec<f64>,
    feature_names: Vec<String>,
    unit: String,
    feature_scaling: Option<FeatureScaling>,
    target_scaling: Option<TargetScaling>,
    /// Generator ground truth, e.g. the weights of a linear dataset.
    true_weights: Option<Vec<f64>>,
    /// Free-form provenance such as feature ranges or noise levels.
    pub metadata: BTreeMap<String, String>,
}

impl TabularDataset {
    /// `features` is row-major with one row per target.
    pub fn new(
        features: Vec<f64>,
        targets: Vec<f64>,
        feature_names: Vec<String>,
        unit: impl Into<String>,
    ) -> Result<Self> {
        let n = targets.len();
        let d = feature_names.len();
        if n == 0 {
            return Err(Error::Dataset("dataset has no rows".into()));
        }
        if d == 0 {
            return Err(Error::Dataset("dataset has no feature columns".into()));
        }
        if features.len() != n * d {
            return Err(Error::Dataset(format!(
                "feature matrix has {} entries, expected {n} rows x {d} columns",
                features.len()
            )));
        }
        if features.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::Dataset("dataset contains NaN or infinite values".into()));
        }
        Ok(Self {
            features,
            targets,
            feature_names,
            unit: unit.into(),
            feature_scaling: None,
            target_scaling: None,
            true_weights: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn feature_scaling(&self) -> Option<&FeatureScaling> {
        self.feature_scaling.as_ref()
    }

    pub fn target_scaling(&self) -> Option<&TargetScaling> {
        self.target_scaling.as_ref()
    }

    pub fn true_weights(&self) -> Option<&[f64]> {
        self.true_weights.as_deref()
    }

    pub(crate) fn set_true_weights(&mut self, w: Vec<f64>) {
        self.true_weights = Some(w);
    }

    pub fn is_standardized(&self) -> bool {
        self.feature_scaling.is_some() && self.target_scaling.is_some()
    }

    /// Rows `indices`, in that order, keeping names, unit and scalings.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim());
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        let mut out = Self::new(features, targets, self.feature_names.clone(), self.unit.clone())?;
        out.feature_scaling = self.feature_scaling.clone();
        out.target_scaling = self.target_scaling;
        out.true_weights = self.true_weights.clone();
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    /// Seeded shuffle, then the first `round(train_fraction · n)` rows become
    /// the training split. Both splits are nonempty when `n ≥ 2`.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let n = self.len();
        if n < 2 {
            return Err(Error::Dataset("need at least two rows to split".into()));
        }
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::Config(format!("train fraction {train_fraction} outside [0, 1]")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed));
        let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        Ok((self.subset(&order[..n_train])?, self.subset(&order[n_train..])?))
    }

    /// Apply previously fitted scalings (e.g. the training split's) to this data.
    pub fn standardize_with(&self, fs: &FeatureScaling, ts: &TargetScaling) -> Result<Self> {
        if fs.means.len() != self.dim() {
            return Err(Error::InputShape { expected: self.dim(), got: fs.means.len() });
        }
        if self.is_standardized() {
            return Err(Error::Dataset("dataset is already standardized".into()));
        }
        let d = self.dim();
        let mut features = Vec::with_capacity(self.features.len());
        for i in 0..self.len() {
            features.extend(fs.apply(&self.features[i * d..(i + 1) * d]));
        }
        let targets = self.targets.iter().map(|&t| ts.apply(t)).collect();
        let mut out = Self::new(features, targets, self.feature_names.clone(), self.unit.clone())?;
        out.feature_scaling = Some(fs.clone());
        out.target_scaling = Some(*ts);
        out.true_weights = self.true_weights.clone();
        out.metadata = self.metadata.clone();
        Ok(out)
    }

    /// Undo standardization, returning data in original units.
    pub fn invert(&self) -> Result<Self> {
        let (Some(fs), Some(ts)) = (&self.feature_scaling, &self.target_scaling) else {
            return Err(Error::Dataset("dataset is not standardized".into()));
        };
        let d = self.dim();
        let mut features = Vec::with_capacity(self.features.len());
        for i in 0..self.len() {
            features.extend(fs.invert(&self.features[i * d..(i + 1) * d]));
        }
        let targets = self.targets.iter().map(|&t| ts.invert(t)).collect();
        let mut out = Self::new(features, targets, self.feature_names.clone(), self.unit.clone())?;
        out.true_weights = self.true_weights.clone();
        out.metadata = self.metadata.clone();
        Ok(out)
    }
}

/// Z-score every feature and min-max scale the targets onto `[0, 1]`, both
/// fitted on `data` itself.
pub fn standardize(data: &TabularDataset) -> Result<TabularDataset> {
    let fs = FeatureScaling::fit(data)?;
    let ts = TargetScaling::fit(data.targets())?;
    data.standardize_with(&fs, &ts)
}

/// Names accepted by [`load_named`].
pub const DATASET_NAMES: [&str; 5] = ["max", "linear", "friedman", "diabetes", "boston"];

/// Raw (unstandardized) benchmark dataset by name. `n` is ignored for the
/// bundled real datasets.
pub fn load_named(name: &str, n: usize, seed: u64) -> Result<TabularDataset> {
    match name {
        "max" => Ok(gen_max(n, 8, seed)),
        "linear" => Ok(gen_linear(n, 8, 4, LinearNoise::default(), seed)?),
        "friedman" => Ok(gen_friedman2(n, 0.0, seed)),
        "diabetes" => diabetes(),
        "boston" => boston(),
        other => Err(Error::Config(format!("unknown dataset `{other}`; expected one of {}", DATASET_NAMES.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(vals: &[f64]) -> TabularDataset {
        TabularDataset::new(vals.to_vec(), vec![10.0, 20.0, 30.0], vec!["a".into()], "u").unwrap()
    }

    #[test]
    fn standardize_reference_values() {
        let s = standardize(&column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(s.targets(), &[0.0, 0.5, 1.0]);
        let mean: f64 = s.features().iter().sum::<f64>() / 3.0;
        let var: f64 = s.features().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
        assert!((var.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_columns_are_named() {
        match standardize(&column(&[2.0, 2.0, 2.0])) {
            Err(Error::ConstantFeature(name)) => assert_eq!(name, "a"),
            other => panic!("{other:?}"),
        }
        let flat = TabularDataset::new(vec![1.0, 2.0], vec![5.0, 5.0], vec!["a".into()], "u").unwrap();
        assert!(matches!(standardize(&flat), Err(Error::ConstantTarget)));
    }

    #[test]
    fn constructor_invariants() {
        assert!(TabularDataset::new(vec![], vec![], vec!["a".into()], "u").is_err());
        assert!(TabularDataset::new(vec![1.0], vec![1.0], vec![], "u").is_err());
        assert!(TabularDataset::new(vec![f64::NAN], vec![1.0], vec!["a".into()], "u").is_err());
        assert!(TabularDataset::new(vec![1.0, 2.0], vec![1.0], vec!["a".into()], "u").is_err());
    }

    #[test]
    fn split_is_seeded_and_partitions() {
        let data = gen_max(50, 3, 1);
        let (a, b) = data.split(0.8, 4).unwrap();
        assert_eq!((a.len(), b.len()), (40, 10));
        let (a2, _) = data.split(0.8, 4).unwrap();
        assert_eq!(a, a2);
        let (a3, _) = data.split(0.8, 5).unwrap();
        assert_ne!(a, a3);
        let mut all: Vec<f64> = a.targets().iter().chain(b.targets()).copied().collect();
        let mut orig = data.targets().to_vec();
        all.sort_by(f64::total_cmp);
        orig.sort_by(f64::total_cmp);
        assert_eq!(all, orig);
    }

    #[test]
    fn load_named_rejects_unknown() {
        assert!(matches!(load_named("mnist", 10, 0), Err(Error::Config(_))));
    }
}
