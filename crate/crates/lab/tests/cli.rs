//! End-to-end checks of the `rmt-lab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rmt_lab::report::ExperimentReport;

const SMOKE: &str = r#"
schema_version = 1
seed = 7

[[experiment]]
name = "smoke"
kind = "local_law"
n_values = [256]
samples = 10

[experiment.z_grid]
energies = [0.0]
eta_range = [-0.5, 0.0]
eta_count = 4
eta_units = "n_power"
"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rmt-lab"));
    cmd.env_remove("RMT_LAB_SEED").arg("--threads").arg("2");
    cmd
}

fn run_config(dir: &Path, text: &str, out: &str, seed_env: Option<&str>) -> Output {
    let config = dir.join("config.toml");
    fs::write(&config, text).unwrap();
    let mut cmd = bin();
    if let Some(seed) = seed_env {
        cmd.env("RMT_LAB_SEED", seed);
    }
    cmd.arg("run").arg(&config).arg("--out").arg(dir.join(out)).output().unwrap()
}

fn read_report(path: &Path) -> ExperimentReport {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn smoke_run_writes_reports_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), SMOKE, "out", None);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("smoke/theta_m_eta_N256"), "{stdout}");
    let report = read_report(&dir.path().join("out/smoke.json"));
    report.check_schema().unwrap();
    assert_eq!(out.status.code(), Some(if report.all_passed() { 0 } else { 1 }));
    assert_eq!(report.provenance.master_seed, 7);
    let csv = fs::read_to_string(dir.path().join("out/smoke.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("N,M,E,eta"), "{header}");
    assert_eq!(csv.lines().count(), 1 + report.tables[0].rows.len());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["results"][0]["name"], "smoke");
    assert!(manifest["error"].is_null());
}

#[test]
fn identical_configs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    run_config(dir.path(), SMOKE, "a", None);
    run_config(dir.path(), SMOKE, "b", None);
    let a = fs::read(dir.path().join("a/smoke.json")).unwrap();
    let b = fs::read(dir.path().join("b/smoke.json")).unwrap();
    assert_eq!(a, b);
    // The worker count does not change results.
    let config = dir.path().join("config.toml");
    let status = Command::new(env!("CARGO_BIN_EXE_rmt-lab"))
        .env_remove("RMT_LAB_SEED")
        .args(["--threads", "1", "run"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("c"))
        .status()
        .unwrap();
    assert!(status.code().is_some());
    assert_eq!(a, fs::read(dir.path().join("c/smoke.json")).unwrap());
}

#[test]
fn seed_environment_variable_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    run_config(dir.path(), SMOKE, "env", Some("99"));
    let report = read_report(&dir.path().join("env/smoke.json"));
    assert_eq!(report.provenance.master_seed, 99);
    run_config(dir.path(), SMOKE, "plain", None);
    let plain = read_report(&dir.path().join("plain/smoke.json"));
    assert_ne!(report.tables, plain.tables);
}

#[test]
fn invalid_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), &SMOKE.replace("samples = 10", "samples = 0"), "out", None);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("experiment[0].samples"), "{stderr}");
    assert!(!dir.path().join("out").exists());

    let out = run_config(dir.path(), &SMOKE.replace("samples = 10", "samples = 10\nsampels = 3"), "out", None);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sampels") && stderr.contains("line"), "{stderr}");
}

#[test]
fn list_is_stable() {
    let a = bin().arg("list").output().unwrap();
    let b = bin().arg("list").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for tag in ["local_law", "counting", "rigidity", "extremes", "fluct_avg", "universality", "domination", "lde"] {
        assert!(text.lines().any(|l| l == tag), "missing {tag}");
    }
}

#[test]
fn sc_eval_prints_json() {
    let out = bin().args(["sc", "eval", "--e", "-0.5", "--eta", "0.1"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["E"], -0.5);
    let (re, im) = (v["m_re"].as_f64().unwrap(), v["m_im"].as_f64().unwrap());
    // m + 1/m + z = 0.
    let d = re * re + im * im;
    assert!((re + re / d - 0.5).abs() < 1e-12 && (im - im / d + 0.1).abs() < 1e-12);
    assert!(v["rho"].as_f64().unwrap() > 0.0);

    let bad = bin().args(["sc", "eval", "--e", "0", "--eta", "0"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn stability_map_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let profile = rmt_core::profile::band_profile_with_shape(1, 64, 8, rmt_core::profile::ProfileShape::Box).unwrap();
    let path = dir.path().join("band.profile");
    rmt_lab::profile_io::write_profile(&path, &profile, rmt_lab::profile_io::Encoding::F64le).unwrap();
    let csv_path = dir.path().join("map.csv");
    let out = bin()
        .args(["stability", "map", "--profile"])
        .arg(&path)
        .args(["--gamma", "0.1", "--e-count", "5", "--eta-count", "4", "--out"])
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "E,eta,Gamma,Gamma_tilde,eta_tilde_E,eta_E,delta_minus,delta_plus");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20);
    for r in rows {
        assert!(r[3] <= r[2] * (1.0 + 1e-12), "gamma_tilde above gamma: {r:?}");
    }
}

#[test]
fn resolvent_probe_prints_json() {
    let out = bin()
        .args(["resolvent", "probe", "--n", "64", "--seed", "3", "--e", "0.2", "--eta", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["N"], 64);
    assert!(v["worst_self_consistent_residual"].as_f64().unwrap() <= 1e-9);
    assert!(v["worst_schur_residual"].as_f64().unwrap() <= 1e-9);
    let lambda = v["lambda"].as_f64().unwrap();
    assert!(lambda >= v["lambda_o"].as_f64().unwrap() && lambda >= v["lambda_d"].as_f64().unwrap());
}
