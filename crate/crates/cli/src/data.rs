use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use refxplain::datasets::{load_csv, load_named, FeatureScaling, TabularDataset, TargetScaling};
use refxplain::evaluation::BenchmarkConfig;
use refxplain::network::TrainConfig;
use refxplain::seed;

use crate::CliError;

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// Built-in dataset (max, linear, friedman, diabetes, boston) or `csv`
    #[arg(long)]
    pub dataset: Option<String>,
    /// CSV file, with `--dataset csv`
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// Target column of the CSV file
    #[arg(long)]
    pub target: Option<String>,
    /// Unit of the CSV target
    #[arg(long)]
    pub unit: Option<String>,
    /// Rows to generate for synthetic datasets
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
}

/// Everything needed to rebuild the exact train/test split a model saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub dataset: String,
    pub path: Option<PathBuf>,
    pub target: Option<String>,
    pub unit: Option<String>,
    pub n: usize,
    pub seed: u64,
    pub train_fraction: f64,
}

impl DataArgs {
    pub fn spec(&self, seed: u64) -> Result<Option<DataSpec>, CliError> {
        let Some(dataset) = self.dataset.clone() else {
            if self.path.is_some() || self.target.is_some() {
                return Err(CliError::Usage("--path and --target need --dataset csv".into()));
            }
            return Ok(None);
        };
        if dataset == "csv" && (self.path.is_none() || self.target.is_none()) {
            return Err(CliError::Usage("--dataset csv needs --path and --target".into()));
        }
        Ok(Some(DataSpec {
            dataset,
            path: self.path.clone(),
            target: self.target.clone(),
            unit: self.unit.clone(),
            n: self.n,
            seed,
            train_fraction: self.train_fraction,
        }))
    }
}

/// Standardized train/test split plus the scalings fitted on the train part.
pub struct Splits {
    pub raw_len: usize,
    pub unit: String,
    pub feature_names: Vec<String>,
    pub train: TabularDataset,
    pub test: TabularDataset,
    pub features: FeatureScaling,
    pub target: TargetScaling,
}

impl DataSpec {
    fn derived(&self, tag: &str) -> u64 {
        seed::derive(self.seed, &[self.dataset.as_str().into(), tag.into()])
    }

    pub fn load(&self) -> Result<Splits, CliError> {
        let raw = match self.dataset.as_str() {
            "csv" => {
                let path = self.path.as_ref().expect("checked when parsing arguments");
                let target = self.target.as_deref().expect("checked when parsing arguments");
                load_csv(path, target, self.unit.as_deref().unwrap_or(target))?
            }
            name => load_named(name, self.n, self.derived("data"))?,
        };
        let (train_raw, test_raw) = raw.split(self.train_fraction, self.derived("split"))?;
        let features = FeatureScaling::fit(&train_raw)?;
        let target = TargetScaling::fit(train_raw.targets())?;
        Ok(Splits {
            raw_len: raw.len(),
            unit: raw.unit().to_string(),
            feature_names: raw.feature_names().to_vec(),
            train: train_raw.standardize_with(&features, &target)?,
            test: test_raw.standardize_with(&features, &target)?,
            features,
            target,
        })
    }

    /// Training hyperparameters the benchmark uses for this dataset.
    pub fn default_training(&self) -> TrainConfig {
        BenchmarkConfig::default()
            .datasets
            .into_iter()
            .find(|d| d.name == self.dataset)
            .map(|d| d.train)
            .unwrap_or(TrainConfig { learning_rate: 0.02, epochs: 300, ..TrainConfig::default() })
    }
}

/// Written next to a trained network as `<net>.metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub data: DataSpec,
    pub samples: usize,
    pub feature_names: Vec<String>,
    pub unit: String,
    pub hidden: usize,
    pub train: TrainConfig,
    pub train_r2: Option<f64>,
    pub test_r2: Option<f64>,
    /// On the `[0, 1]` target scale.
    pub train_mse: f64,
    pub feature_scaling: FeatureScaling,
    pub target_scaling: TargetScaling,
}

pub fn sidecar_path(net: &Path) -> PathBuf {
    let mut s = net.as_os_str().to_owned();
    s.push(".metrics.json");
    PathBuf::from(s)
}

impl TrainSummary {
    pub fn load_for(net: &Path) -> Result<Option<Self>, CliError> {
        let path = sidecar_path(net);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map(Some).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
    }
}
