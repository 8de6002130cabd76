use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eflux_cli::RunConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn eflux(args: &[&str], outdir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eflux"))
        .args(args)
        .arg("--outdir")
        .arg(outdir)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

#[test]
fn example_configs_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = RunConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\nbogus = 2\n").unwrap();
    let out = eflux(&["spectrum", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("EFLUX:config:"));
}

#[test]
fn bad_arguments_use_the_error_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let out = eflux(&["no-such-command"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("EFLUX:usage:"));

    let out = eflux(&["spectrum", "--threads", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truncated_window_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.toml");
    std::fs::write(
        &cfg,
        "seed = 1\ntrials = 20\n[process]\nkind = \"brownian-motion\"\ndomain = [-4.0, 4.0]\n\
         [variance_law]\nj = 4.0\npoints = [[0.0, 2.0]]\n\
         [variance_law.window]\nlo = -0.5\nhi = 0.5\ncells = 100\n",
    )
    .unwrap();
    let out = eflux(&["variance-law", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("EFLUX:window-truncated:"));
}

#[test]
fn deterministic_minimum_lands_in_segment_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("deterministic_segment.toml");
    let out = eflux(&["segment-probs", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for r in read_csv(&dir.path().join("segment-probs.csv")) {
        let p: f64 = r[2].parse().unwrap();
        let expected = if &r[0] == "segment" && &r[1] == "2" { 1.0 } else { 0.0 };
        assert_eq!(p, expected, "{r:?}");
    }
}

#[test]
fn converge_rows_are_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("converge.toml");
    let out = eflux(&["converge", "--config", cfg.to_str().unwrap(), "--trials", "400"], dir.path());
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("converge.csv"));
    assert_eq!(rows.len(), 4);
    for r in rows {
        let s: f64 = (1..4).map(|k| r[k].parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn manifest_records_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = eflux(&["spectrum", "--seed", "42"], dir.path());
    assert!(out.status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["subcommand"], "spectrum");
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["config"]["spectrum"].is_object());
    assert!(dir.path().join("spectrum.csv").exists());
}
