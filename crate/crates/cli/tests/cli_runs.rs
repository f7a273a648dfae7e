//! End-to-end tests of the `dnls` binary: exit codes, output layout and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dnls() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dnls"));
    cmd.env_remove("DNLS_OUTPUT");
    cmd
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    dnls()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

const CUBE8: &str = r#"{"domain": {"kind": "cube", "n_max": 8}}"#;

#[test]
fn stochastic_command_without_seed_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CUBE8);
    let out = tmp.path().join("out");
    let o = run("lp-check", &config, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("lp_check.csv").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{"domain": {"kind": "cube", "n_max": 8}, "lp_chek": {}}"#);
    let o = run("lp-check", &config, &tmp.path().join("out"), &["--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lp_chek"));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("simulate", &tmp.path().join("absent.json"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lp_check_reports_machine_precision_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CUBE8);
    let out = tmp.path().join("out");
    let o = run("lp-check", &config, &out, &["--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&out.join("lp_check.csv"));
    assert_eq!(rows[0], ["trial", "reconstruction_residual", "roundtrip_residual"]);
    assert_eq!(rows.len(), 11);
    for row in &rows[1..] {
        for cell in &row[1..] {
            assert!(cell.parse::<f64>().unwrap() < 1e-12, "{row:?}");
        }
    }
    let m = manifest(&out);
    assert_eq!(m["command"], "lp-check");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["passed"], true);
    assert_eq!(m["outputs"], serde_json::json!(["lp_check.csv"]));
}

#[test]
fn reruns_are_byte_identical_and_hash_tracks_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CUBE8);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run("lp-check", &config, &a, &["--seed", "5"]);
    run("lp-check", &config, &b, &["--seed", "5", "--workers", "2"]);
    assert_eq!(
        std::fs::read(a.join("lp_check.csv")).unwrap(),
        std::fs::read(b.join("lp_check.csv")).unwrap()
    );

    let c = tmp.path().join("c");
    let other = write_config(tmp.path(), r#"{"domain": {"kind": "cube", "n_max": 8}, "lp_check": {"trials": 4}}"#);
    run("lp-check", &other, &c, &["--seed", "5"]);
    let hash = |d: &Path| manifest(d)["config_hash"].as_str().unwrap().to_owned();
    assert_eq!(hash(&c).len(), 64);
    assert_ne!(hash(&a), hash(&c));
    assert_eq!(csv_rows(&c.join("lp_check.csv")).len(), 5);
}

#[test]
fn bilinear_scan_writes_one_row_per_band_pair_and_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"domain": {"kind": "cube", "n_max": 16},
            "bilinear_scan": {"estimates": ["global_time"], "j_range": [2, 4], "trials": 5,
                              "simpson_nodes": 5, "slope_tolerance": null}}"#,
    );
    let out = tmp.path().join("out");
    let o = run("bilinear-scan", &config, &out, &["--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&out.join("global_time.csv"));
    // Pairs (j, k) with 1 <= k <= j and j in {2, 3, 4}: 2 + 3 + 4 = 9, times 5 trials.
    assert_eq!(rows.len(), 1 + 45);
    for row in &rows[1..] {
        let (j, k): (u32, u32) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!((2..=4).contains(&j) && (1..=j).contains(&k));
        let ratio: f64 = row[8].parse().unwrap();
        assert!(ratio.is_finite() && ratio > 0.0);
    }
    assert!(out.join("summary.json").exists());
}

#[test]
fn linear_global_run_has_equal_intervals() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"domain": {"kind": "cube", "n_max": 6},
            "global_run": {"continuation": {"epsilon": 0.0, "target_time": 0.5}}}"#,
    );
    let out = tmp.path().join("out");
    let o = run("global-run", &config, &out, &["--seed", "2"]);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("ledger.csv"));
    assert_eq!(rows[0][..3], ["n", "T_n", "cum_t"]);
    let t1: f64 = rows[1][1].parse().unwrap();
    for row in &rows[1..] {
        let n: f64 = row[0].parse().unwrap();
        let t_n: f64 = row[1].parse().unwrap();
        let cum: f64 = row[2].parse().unwrap();
        assert!((t_n - t1).abs() <= 1e-12 * t1);
        assert!((cum - n * t1).abs() <= 1e-9 * cum, "{row:?}");
    }
}

#[test]
fn output_directory_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CUBE8);
    let env_out = tmp.path().join("from-env");
    let o = dnls()
        .args(["lp-check", "--seed", "1", "--config"])
        .arg(&config)
        .env("DNLS_OUTPUT", &env_out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_out.join("lp_check.csv").exists());
    assert!(env_out.join("manifest.json").exists());
}

#[test]
fn simulate_writes_trajectory_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"domain": {"kind": "cube", "n_max": 8},
            "simulate": {"initial": {"kind": "mode", "index": [1, 2, 1]}, "epsilon": 1.0,
                         "t_end": 0.02, "snapshot_every": 10}}"#,
    );
    let out = tmp.path().join("out");
    let o = run("simulate", &config, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("trajectory.csv"));
    assert!(rows.len() >= 3);
    let snaps: Vec<_> = std::fs::read_dir(out.join("snapshots")).unwrap().collect();
    assert!(!snaps.is_empty() && snaps.len() % 2 == 0);
}
