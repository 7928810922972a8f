//! End-to-end runs of the `tailmc` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tailmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tailmc(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn data_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/synthetic_prices.csv")
}

fn small_grid(dir: &Path, name: &str, n: usize, workers: &str) -> PathBuf {
    let path = dir.join(name);
    ok(&[
        "--workers",
        workers,
        "grid",
        "simulate",
        "--n",
        &n.to_string(),
        "--reps",
        "40",
        "--alpha-min",
        "1.5",
        "--alpha-max",
        "1.9",
        "--alpha-step",
        "0.1",
        "--quiet",
        "--out",
        path.to_str().unwrap(),
    ]);
    path
}

#[test]
fn grid_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_grid(dir.path(), "a.grid", 1000, "1");
    let b = small_grid(dir.path(), "b.grid", 1000, "4");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let info = ok(&["grid", "info", "--grid", a.to_str().unwrap()]);
    assert!(info.contains("n=1000"));
    assert!(info.contains("replications=40"));
}

#[test]
fn estimate_with_split_reports_two_periods() {
    let dir = tempfile::tempdir().unwrap();
    let grid = small_grid(dir.path(), "g.grid", 1000, "1");
    let json = dir.path().join("est.json");
    let csv = dir.path().join("est.csv");
    let stdout = ok(&[
        "estimate",
        "--data",
        data_file().to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--split",
        "2",
        "--ci-reps",
        "20",
        "--out-json",
        json.to_str().unwrap(),
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert!(stdout.contains("synthetic_prices#1"));
    assert!(stdout.contains("synthetic_prices#2"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let periods = doc["periods"].as_array().unwrap();
    assert_eq!(periods.len(), 2);
    assert_eq!(periods[0]["n"], 1000);
    assert_eq!(doc["data"]["rows_read"], 2001);
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with(
        "period,label,n,dropped,q0.5,q2.5,q5,alpha_mc,q95,q97.5,q99.5,loss,ci_failures"
    ));
}

#[test]
fn length_mismatch_names_both_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let grid = small_grid(dir.path(), "g.grid", 500, "1");
    let out = tailmc(&[
        "estimate",
        "--data",
        data_file().to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[length_mismatch]"), "{err}");
    assert!(err.contains("2000") && err.contains("500"), "{err}");
}

#[test]
fn errors_carry_a_category_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    let missing = tailmc(&[
        "grid",
        "info",
        "--grid",
        dir.path().join("none").to_str().unwrap(),
    ]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error[io]"));

    let grid = small_grid(dir.path(), "g.grid", 1000, "1");
    let mut text = fs::read_to_string(&grid).unwrap();
    text = text.replacen("format_version=1", "format_version=2", 1);
    let edited = dir.path().join("edited.grid");
    fs::write(&edited, text).unwrap();
    let out = tailmc(&["grid", "info", "--grid", edited.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[format_version_mismatch]"));

    let out = tailmc(&[
        "estimate",
        "--data",
        data_file().to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--split",
        "3",
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[not_divisible]"));

    let out = tailmc(&[
        "hill-plot",
        "--data",
        data_file().to_str().unwrap(),
        "--column",
        "open",
        "--out",
        dir.path().join("h.csv").to_str().unwrap(),
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[missing_column]"));
    assert!(!dir.path().join("h.csv").exists());
}

#[test]
fn hill_plot_and_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let grid = small_grid(dir.path(), "g.grid", 2000, "1");
    let plot = dir.path().join("hill.csv");
    ok(&[
        "hill-plot",
        "--data",
        data_file().to_str().unwrap(),
        "--format",
        "prices",
        "--grid",
        grid.to_str().unwrap(),
        "--overlay",
        "1.5,1.9",
        "--out",
        plot.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&plot).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,k_fraction,estimate,ci_low,ci_high,grid_1.5,grid_1.9"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 381);
    assert_eq!(rows[0][0], 20.0);
    assert!(rows
        .iter()
        .all(|r| r[3] < r[2] && r[2] < r[4] && r[5] < r[6]));

    let hist = dir.path().join("hist.csv");
    ok(&[
        "hist",
        "--data",
        data_file().to_str().unwrap(),
        "--bins",
        "30",
        "--out",
        hist.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&hist).unwrap();
    assert_eq!(text.lines().count(), 31);
    let total: u64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 2000);
}

#[test]
fn studies_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        ok(&[
            "--workers",
            workers,
            "study",
            "optimal-k",
            "--lengths",
            "500",
            "--alphas",
            "1.3,1.7",
            "--reps",
            "20",
            "--out",
            out.to_str().unwrap(),
        ]);
        out
    };
    let a = run("a", "1");
    let b = run("b", "4");
    for file in ["optimal_k.csv", "mean_curves.csv", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn synthetic_file_regenerates_from_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prices.csv");
    ok(&[
        "synth-prices",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(data_file()).unwrap());
}
