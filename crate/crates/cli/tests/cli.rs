use std::path::Path;
use std::process::{Command, Output};

fn refxplain(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refxplain"))
        .args(args)
        .current_dir(dir)
        .env("REFXPLAIN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(out: &str, name: &str) -> f64 {
    let line =
        out.lines().find(|l| l.trim_start().starts_with(name)).unwrap_or_else(|| panic!("no `{name}` in\n{out}"));
    line.trim_start()[name.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn auction_shapley_credits_the_higher_bid() {
    let dir = tempfile::tempdir().unwrap();
    let o = refxplain(
        &[
            "explain",
            "--builtin",
            "max2",
            "--input",
            "1100,900",
            "--reference",
            "1000",
            "--method",
            "shapley",
            "--baseline",
            "1000,1000",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(field(&out, "x1"), 100.0);
    assert_eq!(field(&out, "x2"), 0.0);
    assert!(out.contains("monetary units"));
}

#[test]
fn restructured_lrp_explains_the_gap_to_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("e.json");
    let o = refxplain(
        &[
            "explain",
            "--builtin",
            "max2",
            "--input",
            "1100,900",
            "--reference",
            "1000",
            "--method",
            "restructure-lrp",
            "--out",
            out_file.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!((field(&out, "sum R") - 100.0).abs() < 1e-9);
    assert!(field(&out, "x1") > field(&out, "x2"));
    let e = refxplain::attribution::Explanation::from_json(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    assert_eq!(e.reference_value, 1000.0);
    assert!(e.conservation_gap.abs() < 1e-9);
}

#[test]
fn reference_and_q_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = refxplain(
        &["explain", "--builtin", "max2", "--input", "1,2", "--reference", "1", "--q", "0.5", "--method", "lrp"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_requires_an_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = refxplain(&["train", "--dataset", "linear"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn wrong_input_length_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = refxplain(&["explain", "--builtin", "max2", "--input", "1,2,3", "--method", "lrp"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 inputs"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_refxplain"))
        .args(["selfcheck"])
        .current_dir(dir.path())
        .env("REFXPLAIN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_on_csv_then_explain_held_out_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/diabetes.csv");
    let o = refxplain(
        &[
            "train",
            "--dataset",
            "csv",
            "--path",
            csv.to_str().unwrap(),
            "--target",
            "target",
            "--unit",
            "disease progression",
            "--epochs",
            "50",
            "--out",
            "net.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("n=442"), "{out}");
    assert!(dir.path().join("net.json.metrics.json").exists());

    for method in ["restructure-lrp", "retrain-lrp", "baseline-scale"] {
        let o =
            refxplain(&["explain", "--net", "net.json", "--index", "0", "--q", "0.25", "--method", method], dir.path());
        let err = String::from_utf8_lossy(&o.stderr);
        // restructuring may legitimately refuse an instance; anything else must work
        if !o.status.success() {
            assert_eq!(method, "restructure-lrp", "{method}: {err}");
            assert!(err.contains("retrain"), "{err}");
            continue;
        }
        let out = stdout(&o);
        assert!(out.contains("disease progression"), "{out}");
        let y = field(&out, "prediction");
        let r = field(&out, "reference");
        let total = field(&out, "sum R");
        if method != "retrain-lrp" {
            assert!((total - (y - r)).abs() < 1e-6 * y.abs().max(1.0), "{method}: {out}");
        }
    }
}

#[test]
fn lrp_conserves_on_a_trained_net() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        refxplain(&["train", "--dataset", "linear", "--n", "300", "--epochs", "20", "--out", "lin.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = refxplain(&["explain", "--net", "lin.json", "--index", "1", "--method", "lrp"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let y = field(&out, "prediction");
    assert!((field(&out, "sum R") - y).abs() < 1e-9 * y.abs().max(1.0), "{out}");

    // biases that take part in the propagation absorb relevance; the gap says how much
    let o =
        refxplain(&["explain", "--net", "lin.json", "--index", "1", "--method", "lrp", "--keep-biases"], dir.path());
    let out = stdout(&o);
    let gap = y - field(&out, "sum R");
    assert!((field(&out, "gap") - gap).abs() < 1e-9 * y.abs().max(1.0), "{out}");
}

#[test]
fn small_benchmark_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = refxplain(
        &[
            "benchmark",
            "--datasets",
            "max",
            "--qs",
            "0.5",
            "--repeats",
            "1",
            "--methods",
            "scaling,restructuring",
            "--out",
            "b",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("dataset,q,method,mean_nmse"));
    assert_eq!(out.lines().count(), 3);
    for f in ["table.csv", "report.json", "figure.csv"] {
        assert!(dir.path().join("b").join(f).exists());
    }
}

#[test]
fn benchmark_rejects_unknown_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let o = refxplain(&["benchmark", "--datasets", "mnist"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selfcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = refxplain(&["selfcheck"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.matches("PASS").count(), 4, "{out}");
}
