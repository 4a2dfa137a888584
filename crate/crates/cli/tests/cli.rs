use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pcflow::flow::Termination;
use pcflow_cli::Summary;
use serde_json::Value;
use tempfile::TempDir;

fn pcflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcflow")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON on stderr: {text}"));
    serde_json::from_str(line).unwrap()
}

fn summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn csv_column(dir: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

const SMALL_TORUS: &str = r#"
name = "small"
seed = 5

[grid]
backend = "torus"
resolution = 16

[initial]
kind = "random"
max_mode = 2
target_margin = 0.5

[flow]
t_end = 0.02
sample_interval = 0.01
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn list_names_every_bundled_scenario() {
    let o = pcflow(&["list"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = String::from_utf8(o.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names, pcflow_cli::list_scenarios());
    assert_eq!(names.len(), 6);
}

#[test]
fn describe_echoes_configuration() {
    let o = pcflow(&["describe", "sphere-futaki"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("exercises: AC10"));
    assert!(text.contains("backend = \"sphere\""));
}

#[test]
fn unknown_scenario_is_a_config_error() {
    let o = pcflow(&["describe", "bogus"]);
    assert_eq!(code(&o), 2);
    let j = stderr_json(&o);
    assert_eq!(j["exit_code"], 2);
    assert!(j["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn odd_resolution_names_the_offending_key() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "odd.toml", &SMALL_TORUS.replace("resolution = 16", "resolution = 15"));
    let o = pcflow(&["validate", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["key"], "grid.resolution");
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "typo.toml", &SMALL_TORUS.replace("t_end", "t_ned"));
    let o = pcflow(&["validate", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_json(&o)["key"], "flow.t_ned");
}

#[test]
fn validate_accepts_every_bundled_scenario() {
    for name in pcflow_cli::list_scenarios() {
        let o = pcflow(&["validate", name]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn flat_torus_stays_fixed() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fp");
    let o = pcflow(&["run", "torus-fixed-point", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let calabi = csv_column(&out, "calabi_energy");
    assert_eq!(calabi.len(), 11);
    assert!(calabi.iter().all(|c| *c <= 1e-20), "{calabi:?}");
    let s = summary(&out);
    assert_eq!(s.termination, Termination::ReachedTEnd);
    assert_eq!(s.samples, 11);
    let l = s.lichnerowicz.unwrap();
    assert!((l.lambda_min - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-8);
    assert!(out.join("snapshots/000000.pcf1").exists());
}

#[test]
fn positivity_violation_is_a_runtime_failure() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL_TORUS.replace(
        "kind = \"random\"\nmax_mode = 2\ntarget_margin = 0.5",
        "kind = \"fourier\"\nterms = [{ mode = [1, 0], cos = 0.2 }]",
    );
    let cfg = write(tmp.path(), "bad.toml", &text);
    let out = tmp.path().join("bad");
    let o = pcflow(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert_eq!(stderr_json(&o)["exit_code"], 3);
    assert_eq!(summary(&out).termination, Termination::PositivityLoss);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = write(tmp.path(), "file", "");
    let out = format!("{blocker}/sub");
    let o = pcflow(&["run", "linearized-probe", "--out", &out]);
    assert_eq!(code(&o), 4);
    assert_eq!(stderr_json(&o)["exit_code"], 4);
}

#[test]
fn seed_override_and_thread_count_keep_csv_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL_TORUS);
    let run = |threads: &str, seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = pcflow(&["--threads", threads, "run", "--config", &cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("diagnostics.csv")).unwrap()
    };
    let a = run("1", "9", "a");
    assert_eq!(a, run("3", "9", "b"));
    assert_ne!(a, run("1", "10", "c"));
    assert_eq!(summary(&tmp.path().join("a")).seed, 9);
}

#[test]
fn batch_runs_each_entry_into_its_own_directory() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "small.toml", SMALL_TORUS);
    let batch = write(tmp.path(), "batch.txt", "# two runs\nsmall.toml\n\nlinearized-probe\n");
    let out = tmp.path().join("runs");
    let o = pcflow(&["run", "--batch", &batch, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out.join("small")).name, "small");
    let probe = summary(&out.join("linearized-probe")).jacobian_probe.unwrap();
    assert!(probe.slopes.iter().all(|s| (s - 1.0).abs() <= 0.1), "{probe:?}");
}
