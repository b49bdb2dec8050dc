//! End-to-end runs of the `hardylab` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/examples")
        .join(format!("{name}.json"))
}

fn hardylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardylab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn run_example(name: &str, out: &Path) -> Output {
    hardylab(&[
        name,
        "--config",
        example(name).to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn eval_example_writes_rows_with_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_example("eval", tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("eval.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param,A,B,h_reduced,lorentz,weak_norm,morrey,quotient,config_hash,s_min,s_max,n"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 12);
    assert_eq!(first[0], "1.0000000000000000e0");
    let a: f64 = first[1].parse().unwrap();
    let b: f64 = first[2].parse().unwrap();
    assert!((a / (5.0 * PI) - 1.0).abs() < 1e-12);
    assert!((b / (4.0 * PI) - 1.0).abs() < 1e-12);
    assert_eq!(first[8].len(), 64);
    assert_eq!(first[11], "3001");
    assert_eq!(lines.count(), 3);
    let manifest = read_json(&tmp.path().join("manifest.json"));
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["config_hash"], first[8]);
    assert!(tmp.path().join("eval_quotient.dat").exists());
}

#[test]
fn infinite_r_is_written_as_inf() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "eval", "exponents": {"d": 3, "r": "inf", "theta": 0.5},
            "family": {"id": "uc_profile", "params": {"c": 0.3}}}"#,
    );
    let out_dir = tmp.path().join("out");
    let out = hardylab(&["eval", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let json = read_json(&out_dir.join("eval.json"));
    assert_eq!(json["exponents"]["r"], "inf");
    let q = json["rows"][0]["report"]["quotient"].as_f64().unwrap();
    let target = 4.0 * PI * (4.0 * PI / 3.0f64).powf(-1.0 / 3.0);
    assert!((q / target - 1.0).abs() < 1e-6);
}

#[test]
fn unknown_parameter_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "eval", "exponents": {"d": 3},
            "family": {"id": "terracini", "params": {"eps": 1.0}}}"#,
    );
    let out_dir = tmp.path().join("out");
    let out = hardylab(&["eval", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let record: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["status"], "error");
    assert_eq!(record["kind"], "config");
    assert!(record["message"].as_str().unwrap().contains("eps"));
    assert!(!out_dir.exists());
}

#[test]
fn command_must_match_config() {
    let out = hardylab(&["verify", "--config", example("eval").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_keeps_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "eval", "exponents": {"d": 3},
            "family": {"id": "piecewise_power", "params": {"eps": [1.0, 0.5, -1.0]}}}"#,
    );
    let out_dir = tmp.path().join("out");
    let out = hardylab(&["eval", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let record: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["kind"], "numerical");
    let manifest = read_json(&out_dir.join("manifest.json"));
    assert_eq!(manifest["status"], "partial");
    assert_eq!(manifest["partial"], true);
    assert!(manifest["error"]["message"]
        .as_str()
        .unwrap()
        .contains("eps = -1"));
    let csv = fs::read_to_string(out_dir.join("eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(out_dir.join("error.json").exists());
}

#[test]
fn seed_flag_enters_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let hash = |seed: &str, sub: &str| {
        let dir = tmp.path().join(sub);
        let out = hardylab(&[
            "eval",
            "--config",
            example("eval").to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
            "--threads",
            "2",
        ]);
        assert!(out.status.success());
        read_json(&dir.join("manifest.json"))["config_hash"].clone()
    };
    assert_eq!(hash("7", "a"), hash("7", "b"));
    assert_ne!(hash("7", "a"), hash("8", "c"));
}

#[test]
fn constants_record_the_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_example("constants", tmp.path());
    assert!(out.status.success());
    let json = read_json(&tmp.path().join("constants.json"));
    let inf = json["c_rad_inf"]["value"].as_f64().unwrap();
    assert!((inf / (4.0 * PI * (4.0 * PI / 3.0f64).powf(-1.0 / 3.0)) - 1.0).abs() < 1e-14);
    let two_star = json["c_rad_2star"]["value"].as_f64().unwrap();
    let expected = (PI / 2.0).powf(2.0 / 3.0) * (4.0 * PI).powf(2.0 / 3.0);
    assert!((two_star / expected - 1.0).abs() < 1e-4);
    assert!(json["c_rad_2star"]["provenance"].is_string());
}

#[test]
fn scaling_example_reports_the_window() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_example("scaling", tmp.path());
    assert!(out.status.success());
    let json = read_json(&tmp.path().join("scaling.json"));
    let w = &json["inference"]["admissible"];
    assert!((w["lower"].as_f64().unwrap() - 1.0 / 3.0).abs() < 0.01);
    assert!((w["upper"].as_f64().unwrap() - 0.5).abs() < 0.01);
    assert_eq!(json["sweeps"].as_array().unwrap().len(), 2);
    assert!(tmp.path().join("scaling_multi_bubble.csv").exists());
}

#[test]
fn custom_scaling_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "scaling", "exponents": {"d": 3, "r": 6},
            "sweeps": [{"label": "eps_down",
                        "family": {"id": "piecewise_power", "params": {"eps": [0.5, 0.25, 0.125, 0.0625]}}}]}"#,
    );
    let out_dir = tmp.path().join("out");
    let out = hardylab(&[
        "scaling",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = read_json(&out_dir.join("scaling.json"));
    let b = json["sweeps"][0]["fits"]["b"]["slope"].as_f64().unwrap();
    assert!((b + 1.0).abs() < 1e-6);
    assert_eq!(json["sweeps"][0]["direction"], "to_zero");
}

#[test]
fn verify_example_is_green() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_example("verify", tmp.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);
    let json = read_json(&tmp.path().join("verify.json"));
    assert_eq!(json["all_passed"], true);
    assert!(json["assertions"].as_u64().unwrap() >= 200);
}
