//! End-to-end checks of the command-line interface: exit codes, artifact
//! schemas, golden values, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metrograph"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("metrograph_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_interval_prints_the_table_value() {
    let dir = temp_dir("spectrum_interval");
    let output = bin()
        .args(["spectrum", "--graph", "interval", "--n", "5", "--convention", "dxN"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).contains("7.639320"), "{}", stdout(&output));

    let artifact = read_json(&dir.join("spectrum_interval_dxN_n5_q.json"));
    assert_eq!(artifact["n"], 5);
    let scaled = artifact["clusters"][0]["scaled"].as_f64().unwrap();
    assert!((scaled - 7.6393).abs() < 1e-4);
    assert_eq!(artifact["config"]["command"], "spectrum");
}

#[test]
fn spectrum_circle_reports_multiplicity_two() {
    let dir = temp_dir("spectrum_circle");
    let output = bin()
        .args(["spectrum", "--graph", "circle", "--n", "8", "-k", "2"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let artifact = read_json(&dir.join("spectrum_circle_dxN_n8_q.json"));
    assert_eq!(artifact["clusters"][0]["multiplicity"], 2);
}

#[test]
fn spectrum_phi_reports_reciprocal_columns() {
    let dir = temp_dir("spectrum_phi");
    let output = bin()
        .args(["spectrum", "--graph", "interval", "--n", "5", "--operator", "phi"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("alpha"), "{text}");
    assert!(text.contains("0.130901"), "{text}");
}

#[test]
fn missing_graph_file_is_a_usage_error() {
    let output = bin()
        .args(["spectrum", "--graph", "no_such_file.json", "--n", "5"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn graph_document_roundtrip() {
    let dir = temp_dir("document");
    let doc = r#"{
        "normalize": true,
        "vertices": ["a", "b"],
        "segments": [{"u": "a", "v": "b", "length": 2.0}],
        "measure": {"atoms": [{"at": "a", "mass": 0.25}],
                    "density": [{"segment": 0, "pieces": [{"from": 0.0, "to": 2.0, "coeffs": [0.375]}]}]}
    }"#;
    let path = dir.join("two.json");
    std::fs::write(&path, doc).unwrap();
    let output = bin()
        .args(["spectrum", "--graph", path.to_str().unwrap()])
        .args(["--n", "12", "--convention", "voronoi", "--measure", "embedded"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
}

#[test]
fn converge_matches_intro_values_and_is_reproducible() {
    let dir = temp_dir("converge");
    let run = || {
        bin()
            .args(["converge", "--graph", "interval", "--schedule", "5,10,50"])
            .args(["--out", dir.to_str().unwrap()])
            .output()
            .unwrap()
    };
    let output = run();
    assert_eq!(output.status.code(), Some(0));

    let csv = std::fs::read_to_string(dir.join("converge_interval_dxN_i1.csv")).unwrap();
    assert!(csv.starts_with("# config:"));
    let expect = [(5, 7.6393), (10, 8.8098), (50, 9.6690)];
    for line in csv.lines().skip(2) {
        let fields: Vec<&str> = line.split(',').collect();
        let n: usize = fields[0].parse().unwrap();
        let scaled: f64 = fields[1].parse().unwrap();
        let (_, want) = expect.iter().find(|(m, _)| *m == n).unwrap();
        assert!((scaled - want).abs() < 1e-4, "N={n}: {scaled}");
    }

    // byte-identical rerun, apart from the wall-time column
    let strip_seconds = |text: &str| -> String {
        text.lines()
            .map(|line| match line.rsplit_once(',') {
                Some((head, _)) if line.chars().next().map(char::is_numeric) == Some(true) => {
                    head.to_string()
                }
                _ => line.to_string(),
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let first = strip_seconds(&csv);
    run();
    let second =
        strip_seconds(&std::fs::read_to_string(dir.join("converge_interval_dxN_i1.csv")).unwrap());
    assert_eq!(first, second);

    let plot = std::fs::read_to_string(dir.join("converge_interval_dxN_i1_plot.csv")).unwrap();
    assert!(plot.contains("log10_n,log10_abs_error"));
}

#[test]
fn converge_index_two_targets_the_second_eigenvalue() {
    let dir = temp_dir("converge_i2");
    let output = bin()
        .args(["converge", "--graph", "interval", "--schedule", "10,20,40", "--index", "2"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let artifact = read_json(&dir.join("converge_interval_dxN_i2.json"));
    let reference = artifact["reference"]["lambda"].as_f64().unwrap();
    let four_pi_sq = 4.0 * std::f64::consts::PI.powi(2);
    assert!((reference - four_pi_sq).abs() < 1e-9);
    // records head toward the reference
    let records = artifact["records"].as_array().unwrap();
    let last = records.last().unwrap()["scaled"].as_f64().unwrap();
    assert!((last - four_pi_sq).abs() < 2.5, "{last}");
}

#[test]
fn empty_schedule_is_a_usage_error() {
    let output = bin()
        .args(["converge", "--graph", "interval", "--schedule", ""])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn jobs_flag_gives_identical_records() {
    let dir = temp_dir("converge_jobs");
    bin()
        .args(["converge", "--graph", "circle", "--schedule", "8,16,32"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    let sequential = read_json(&dir.join("converge_circle_dxN_i1.json"));
    bin()
        .args(["converge", "--graph", "circle", "--schedule", "8,16,32", "--jobs", "3"])
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    let parallel = read_json(&dir.join("converge_circle_dxN_i1.json"));
    for (a, b) in sequential["records"]
        .as_array()
        .unwrap()
        .iter()
        .zip(parallel["records"].as_array().unwrap())
    {
        assert_eq!(a["scaled"], b["scaled"]);
        assert_eq!(a["multiplicity"], b["multiplicity"]);
    }
}

#[test]
fn selftest_passes_and_fails_on_demand() {
    let ok = bin()
        .args(["selftest", "--trials", "24", "--max-n", "60"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("all identity suites passed"));

    let too_strict = bin()
        .args(["selftest", "--trials", "24", "--max-n", "60", "--tol", "1e-15"])
        .output()
        .unwrap();
    assert_eq!(too_strict.status.code(), Some(1));

    let injected = bin()
        .args(["selftest", "--trials", "24", "--max-n", "60", "--inject-perturbation"])
        .output()
        .unwrap();
    assert_eq!(injected.status.code(), Some(1));
    let err = String::from_utf8_lossy(&injected.stderr).into_owned();
    assert!(err.contains("laplacian_inverse"), "{err}");
}

#[test]
fn out_env_var_is_honored() {
    let dir = temp_dir("env_out");
    let output = bin()
        .args(["spectrum", "--graph", "interval", "--n", "6"])
        .env("METROGRAPH_OUT", dir.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(dir.join("spectrum_interval_dxN_n6_q.json").exists());

    // requesting more clusters than the constrained space holds is a
    // usage error
    let over = bin()
        .args(["spectrum", "--graph", "interval", "--n", "4", "-k", "4"])
        .env("METROGRAPH_OUT", dir.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(over.status.code(), Some(2));
}
