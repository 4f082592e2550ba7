use std::path::PathBuf;
use std::process::Command;

use ppcomp::config::{Algorithm, ExperimentConfig};
use ppcomp::harness::{aggregate, run_sweep_rows, run_trial, coordinates, dictionary_for, RAW_HEADER};
use ppcomp::output::{read_agg, read_raw, run_to_dir};
use ppcomp::smoke::{run_smoke, smoke_config, SMOKE_CONFIG};

const SMALL: &str = r#"
M = 4
N = 4
M_RF = [2, 4]
N_RF = [2, 2]
K = 1
L = 2
grid_sizes = [[8, 8], [12, 12]]
snapshot_counts = [10, 30]
snr_db = [10.0, inf]
trials = 3
algorithms = ["COMP", "PPCOMP"]
master_seed = 99
"#;

fn small() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMALL).unwrap()
}

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn without_wall_time(text: &str) -> String {
    let wall = RAW_HEADER.iter().position(|&h| h == "wall_time_ms").unwrap();
    text.lines()
        .map(|line| {
            let mut cols: Vec<&str> = line.split(',').collect();
            cols.remove(wall);
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweep_covers_the_cartesian_product() {
    let cfg = small();
    let rows = run_sweep_rows(&cfg, Some(2)).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2 * 2 * 3 * 2);
    assert!(rows.iter().all(|r| !r.failed()));
    assert!(rows.iter().all(|r| (0.0..=1.0 + 1e-10).contains(&r.eta) && r.nmse >= 0.0));
}

#[test]
fn single_coordinate_gives_one_row_per_algorithm() {
    let text = SMALL
        .replace("M_RF = [2, 4]", "M_RF = 2")
        .replace("N_RF = [2, 2]", "N_RF = 2")
        .replace("grid_sizes = [[8, 8], [12, 12]]", "grid_sizes = [[8, 8]]")
        .replace("snapshot_counts = [10, 30]", "snapshot_counts = [10]")
        .replace("snr_db = [10.0, inf]", "snr_db = [10.0]")
        .replace("trials = 3", "trials = 1");
    let rows = run_sweep_rows(&ExperimentConfig::from_toml_str(&text).unwrap(), None).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn trials_are_deterministic_and_paired() {
    let cfg = small();
    let coord = coordinates(&cfg).unwrap()[3];
    let dict = dictionary_for(&cfg, coord.grid_rx, coord.grid_tx).unwrap();
    let a = run_trial(&cfg, &dict, &coord, 2);
    let b = run_trial(&cfg, &dict, &coord, 2);
    assert_eq!(a.len(), 2);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.eta.to_bits(), x.nmse.to_bits(), x.seed), (y.eta.to_bits(), y.nmse.to_bits(), y.seed));
    }
    assert_eq!(a[0].algorithm, Algorithm::Comp);
    assert_eq!(a[1].algorithm, Algorithm::Ppcomp);
    assert_eq!(a[0].seed, a[1].seed);
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = small();
    let one = run_sweep_rows(&cfg, Some(1)).unwrap();
    let three = run_sweep_rows(&cfg, Some(3)).unwrap();
    assert_eq!(one.len(), three.len());
    for (x, y) in one.iter().zip(&three) {
        assert_eq!((x.trial, x.algorithm, x.m, x.snapshots), (y.trial, y.algorithm, y.m, y.snapshots));
        assert_eq!(x.eta.to_bits(), y.eta.to_bits());
        assert_eq!(x.final_residual.to_bits(), y.final_residual.to_bits());
    }
}

#[test]
fn output_files_round_trip_and_reproduce() {
    let cfg = small();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let out = run_to_dir(&cfg, dir_a.path(), Some(2)).unwrap();
    run_to_dir(&cfg, dir_b.path(), Some(1)).unwrap();
    assert!(!dir_a.path().join("raw.partial.csv").exists());

    let raw_a = std::fs::read_to_string(&out.raw).unwrap();
    let raw_b = std::fs::read_to_string(dir_b.path().join("raw.csv")).unwrap();
    assert_eq!(raw_a.lines().next().unwrap(), RAW_HEADER.join(","));
    assert_eq!(without_wall_time(&raw_a), without_wall_time(&raw_b));
    assert_eq!(
        std::fs::read_to_string(&out.agg).unwrap(),
        std::fs::read_to_string(dir_b.path().join("agg.csv")).unwrap()
    );

    let rows = read_raw(&out.raw).unwrap();
    assert_eq!(rows.len(), out.rows.len());
    for (r, o) in rows.iter().zip(&out.rows) {
        assert!((r.eta - o.eta).abs() <= 1e-14 * o.eta.abs().max(1e-300));
        assert_eq!(r.seed, o.seed);
    }
    let agg = read_agg(&out.agg).unwrap();
    let recomputed = aggregate(&rows);
    assert_eq!(agg.len(), recomputed.len());
    for (a, b) in agg.iter().zip(&recomputed) {
        assert_eq!(a.n_trials, 3);
        assert!((a.eta_mean - b.eta_mean).abs() < 1e-12);
        assert!((a.nmse_mean - b.nmse_mean).abs() < 1e-12 * b.nmse_mean.max(1.0));
    }

    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out.meta).unwrap()).unwrap();
    assert_eq!(meta["config"]["master_seed"], 99);
    assert_eq!(meta["rows"], rows.len());
    assert!(meta["assumptions"]["snr_definition"].is_string());
}

#[test]
fn numeric_fields_carry_twelve_significant_digits() {
    let cfg = small();
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_dir(&cfg, dir.path(), None).unwrap();
    let text = std::fs::read_to_string(out.raw).unwrap();
    let eta_col = RAW_HEADER.iter().position(|&h| h == "eta").unwrap();
    for line in text.lines().skip(1) {
        let field = line.split(',').nth(eta_col).unwrap();
        let mantissa = field.split('e').next().unwrap().replace(['.', '-'], "");
        assert!(mantissa.len() >= 12, "{field}");
    }
}

#[test]
fn failed_rows_are_excluded_from_aggregates() {
    let cfg = small();
    let mut rows = run_sweep_rows(&cfg, Some(1)).unwrap();
    rows[0].eta = f64::NAN;
    rows[0].nmse = f64::NAN;
    let agg = aggregate(&rows);
    assert_eq!(agg[0].n_excluded, 1);
    assert_eq!(agg[0].n_trials, 3);
    let kept: Vec<f64> = rows[1..]
        .iter()
        .filter(|r| r.algorithm == rows[0].algorithm && r.m == rows[0].m && r.snapshots == rows[0].snapshots
            && r.grid_rx == rows[0].grid_rx && r.snr_db == rows[0].snr_db)
        .map(|r| r.eta)
        .collect();
    assert_eq!(kept.len(), 2);
    assert!((agg[0].eta_mean - (kept[0] + kept[1]) / 2.0).abs() < 1e-15);
}

#[test]
fn smoke_config_recovers_on_grid_paths() {
    let (rows, bad) = run_smoke(None).unwrap();
    assert_eq!(rows.len(), 40);
    assert!(bad.is_empty(), "{bad:?}");
    assert!(rows.iter().all(|r| r.eta > 0.99));
}

#[test]
fn shipped_configs_parse() {
    for name in ["fig1.toml", "fig2.toml", "smoke.toml"] {
        ExperimentConfig::load(&repo_root().join("configs").join(name)).unwrap();
    }
    let shipped = ExperimentConfig::load(&repo_root().join("configs/smoke.toml")).unwrap();
    assert_eq!(shipped, smoke_config());
    assert!(SMOKE_CONFIG.contains("on_grid = true"));
}

#[test]
fn fig1_config_yields_expected_row_count() {
    let cfg = ExperimentConfig::load(&repo_root().join("configs/fig1.toml")).unwrap();
    let coords = coordinates(&cfg).unwrap();
    let rows_expected = coords.len() * cfg.trials * cfg.algorithms.len();
    assert_eq!(rows_expected, 3 * cfg.snapshot_counts.len() * 2 * 100);
}

#[test]
fn cli_runs_and_reports_errors() {
    let exe = env!("CARGO_BIN_EXE_ppcomp");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.toml");
    std::fs::write(&cfg_path, SMALL).unwrap();
    let out_dir = dir.path().join("out");
    let status = Command::new(exe)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .args(["--workers", "2", "--seed", "5"])
        .status()
        .unwrap();
    assert!(status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["master_seed"], 5);

    std::fs::write(&cfg_path, format!("{SMALL}\nbogus = 1\n")).unwrap();
    let status = Command::new(exe)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(!status.success());

    let status = Command::new(exe).arg("smoke").status().unwrap();
    assert!(status.success());
}
