use refxplain::evaluation::{run_benchmark, run_benchmark_with, BenchmarkConfig, BenchmarkHooks, Method};

fn small() -> BenchmarkConfig {
    let mut cfg = BenchmarkConfig::default();
    cfg.restrict_datasets(&["max".into(), "linear".into()]).unwrap();
    cfg.repeats = 2;
    cfg.n_synthetic = 400;
    cfg.max_instances = 15;
    cfg.k_random = 30;
    cfg.hidden = 32;
    for ds in &mut cfg.datasets {
        ds.train.epochs = 40;
    }
    cfg.retrain.train.epochs = 20;
    cfg
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small();
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_json(), b.to_json());
    let mut other = cfg.clone();
    other.seed = 1;
    assert_ne!(run_benchmark(&other).unwrap().to_csv(), a.to_csv());
}

#[test]
fn record_counts_follow_the_grid() {
    let cfg = small();
    let r = run_benchmark(&cfg).unwrap();
    assert_eq!(r.records.len(), 2 * 3 * 4 * 2);
    assert_eq!(r.aggregates.len(), 2 * 3 * 4);
    assert_eq!(r.models.len(), 2 * 2);
    assert_eq!(r.to_csv().lines().count(), 1 + 2 * 3 * 4);
    for a in &r.aggregates {
        assert_eq!(a.n_repeats + a.n_failures, 2);
    }
}

#[test]
fn scoring_the_oracle_against_itself_gives_zero() {
    let mut cfg = small();
    cfg.repeats = 1;
    let r = run_benchmark_with(&cfg, BenchmarkHooks { inject_reference: true }).unwrap();
    let scored: Vec<f64> = r.records.iter().filter_map(|x| x.normalized_mse).collect();
    assert!(!scored.is_empty());
    assert!(scored.iter().all(|v| *v == 0.0), "{scored:?}");
}

#[test]
fn config_survives_toml() {
    let cfg = small();
    let back = BenchmarkConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back.to_toml(), cfg.to_toml());
    assert!(BenchmarkConfig::from_toml("repeats = 0").is_err());
    assert!(BenchmarkConfig::from_toml("qs = [1.5]").is_err());
}

#[test]
fn default_grid_has_every_method_and_dataset() {
    let cfg = BenchmarkConfig::default();
    assert_eq!(cfg.methods, Method::ALL.to_vec());
    let names: Vec<&str> = cfg.datasets.iter().map(|d| d.name.as_str()).collect();
    assert_eq!(names, ["max", "linear", "friedman", "diabetes", "boston"]);
    assert_eq!(cfg.qs, [0.25, 0.5, 0.75]);
    assert_eq!(cfg.repeats, 10);
    assert_eq!(cfg.retrain.tau_minus, -0.3);
    assert_eq!(cfg.retrain.tau_plus, f64::INFINITY);
}
