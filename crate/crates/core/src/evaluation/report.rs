use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::benchmark::{BenchmarkConfig, Method};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelRecord {
    pub dataset: String,
    pub repeat: usize,
    pub train_r2: Option<f64>,
    pub test_r2: Option<f64>,
    pub train_mse: f64,
    pub error: Option<String>,
}

/// Score of one method at one reference value in one repeat.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatRecord {
    pub dataset: String,
    pub q: f64,
    pub reference_value: f64,
    pub method: Method,
    pub repeat: usize,
    pub n_instances: usize,
    pub normalized_mse: Option<f64>,
    pub error: Option<String>,
}

impl RepeatRecord {
    pub(crate) fn failure(dataset: &str, q: f64, reference: f64, method: Method, repeat: usize, cause: &str) -> Self {
        Self {
            dataset: dataset.into(),
            q,
            reference_value: reference,
            method,
            repeat,
            n_instances: 0,
            normalized_mse: None,
            error: Some(cause.into()),
        }
    }
}

/// Mean ± sample standard deviation over the successful repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub dataset: String,
    pub q: f64,
    pub method: Method,
    pub mean_nmse: f64,
    pub std_nmse: f64,
    pub n_repeats: usize,
    pub n_failures: usize,
}

/// Choices that shape the numbers but are not visible in the tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub repeats: usize,
    pub max_instances: usize,
    pub k_random: usize,
    pub random_attributions: &'static str,
    pub aggregation: &'static str,
    pub shapley_baseline: &'static str,
    pub flood_mode: &'static str,
}

impl Provenance {
    pub(crate) fn for_config(cfg: &BenchmarkConfig) -> Self {
        Self {
            seed: cfg.seed,
            repeats: cfg.repeats,
            max_instances: cfg.max_instances,
            k_random: cfg.k_random,
            random_attributions: "(y - y_ref) * u / sum(u), u ~ U(0, 1]^d",
            aggregation: "per repeat: mean method MSE over instances / mean random MSE over instances",
            shapley_baseline: "standardized origin, clipped function max(0, f - y_ref)",
            flood_mode: "symmetric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub provenance: Provenance,
    pub models: Vec<ModelRecord>,
    pub records: Vec<RepeatRecord>,
    pub aggregates: Vec<Aggregate>,
}

pub(crate) fn aggregate(cfg: &BenchmarkConfig, records: &[RepeatRecord]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for ds in &cfg.datasets {
        for &q in &cfg.qs {
            for &m in &cfg.methods {
                let group: Vec<&RepeatRecord> =
                    records.iter().filter(|r| r.dataset == ds.name && r.q == q && r.method == m).collect();
                let values: Vec<f64> = group.iter().filter_map(|r| r.normalized_mse).collect();
                let n = values.len();
                let mean = values.iter().sum::<f64>() / n as f64;
                let std = if n > 1 {
                    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
                } else {
                    0.0
                };
                out.push(Aggregate {
                    dataset: ds.name.clone(),
                    q,
                    method: m,
                    mean_nmse: if n == 0 { f64::NAN } else { mean },
                    std_nmse: if n == 0 { f64::NAN } else { std },
                    n_repeats: n,
                    n_failures: group.len() - n,
                });
            }
        }
    }
    out
}

impl BenchmarkReport {
    pub fn aggregate(&self, dataset: &str, q: f64, method: Method) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.dataset == dataset && a.q == q && a.method == method)
    }

    /// Fraction of repeat records that produced a score.
    pub fn success_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.normalized_mse.is_some()).count() as f64 / self.records.len() as f64
    }

    /// One row per (dataset, q, method).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dataset,q,method,mean_nmse,std_nmse,n_repeats,n_failures\n");
        for a in &self.aggregates {
            writeln!(
                s,
                "{},{},{},{},{},{},{}",
                a.dataset,
                a.q,
                a.method.label(),
                a.mean_nmse,
                a.std_nmse,
                a.n_repeats,
                a.n_failures
            )
            .unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Mean normalized MSE per method, averaged over datasets for each q and
    /// over q for each dataset.
    pub fn figure_csv(&self) -> String {
        let mut s = String::from("panel,key,method,mean_nmse\n");
        let methods: Vec<Method> = dedup(self.aggregates.iter().map(|a| a.method));
        let qs: Vec<f64> = dedup(self.aggregates.iter().map(|a| a.q));
        let datasets: Vec<String> = dedup(self.aggregates.iter().map(|a| a.dataset.clone()));
        let mean_of = |it: Vec<f64>| {
            let v: Vec<f64> = it.into_iter().filter(|x| x.is_finite()).collect();
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        for q in &qs {
            for m in &methods {
                let v = self.aggregates.iter().filter(|a| a.q == *q && a.method == *m).map(|a| a.mean_nmse).collect();
                writeln!(s, "by_q,{q},{},{}", m.label(), mean_of(v)).unwrap();
            }
        }
        for d in &datasets {
            for m in &methods {
                let v =
                    self.aggregates.iter().filter(|a| &a.dataset == d && a.method == *m).map(|a| a.mean_nmse).collect();
                writeln!(s, "by_dataset,{d},{},{}", m.label(), mean_of(v)).unwrap();
            }
        }
        s
    }

    /// Write `table.csv`, `report.json` and `figure.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [("table.csv", self.to_csv()), ("report.json", self.to_json()), ("figure.csv", self.figure_csv())];
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn dedup<T: PartialEq>(it: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in it {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}
