//! `raw.csv`, `agg.csv` and `meta.json` writers.
//!
//! Measured values are written as `{:.14e}` (15 significant digits); failed rows carry
//! `NaN`. Rows are appended to `raw.partial.csv` as trials finish, and the sorted
//! `raw.csv` replaces it when the sweep completes.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::harness::{aggregate, run_sweep_with, AggregateRow, TrialResult, AGG_HEADER, RAW_HEADER};

fn sci(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn raw_record(r: &TrialResult) -> [String; 13] {
    [
        r.grid_rx.to_string(),
        r.grid_tx.to_string(),
        r.snapshots.to_string(),
        r.m.to_string(),
        r.snr_db.to_string(),
        r.algorithm.to_string(),
        r.trial.to_string(),
        sci(r.eta),
        sci(r.nmse),
        r.support_size.to_string(),
        sci(r.final_residual),
        sci(r.wall_time_ms),
        r.seed.to_string(),
    ]
}

pub fn agg_record(a: &AggregateRow) -> [String; 12] {
    [
        a.grid_rx.to_string(),
        a.grid_tx.to_string(),
        a.snapshots.to_string(),
        a.m.to_string(),
        a.snr_db.to_string(),
        a.algorithm.to_string(),
        a.n_trials.to_string(),
        a.n_excluded.to_string(),
        sci(a.eta_mean),
        sci(a.eta_std),
        sci(a.nmse_mean),
        sci(a.nmse_std),
    ]
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_raw(path: &Path, rows: &[TrialResult]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RAW_HEADER)?;
    for r in rows {
        w.write_record(raw_record(r))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_agg(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(AGG_HEADER)?;
    for a in rows {
        w.write_record(agg_record(a))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_raw(path: &Path) -> Result<Vec<TrialResult>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<TrialResult>, _>>()?)
}

pub fn read_agg(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<AggregateRow>, _>>()?)
}

#[derive(Debug, Serialize)]
struct Assumptions {
    ground_truth: &'static str,
    snr_definition: &'static str,
    rf_chain_pairs: Vec<(usize, usize)>,
    sensing_redrawn_per_trial: bool,
    seed_inputs: &'static str,
    metric_rank: usize,
    on_grid: bool,
    failed_rows: &'static str,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    assumptions: Assumptions,
    rows: usize,
    failed_rows: usize,
}

pub fn write_meta(path: &Path, cfg: &ExperimentConfig, rows: &[TrialResult]) -> Result<()> {
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        assumptions: Assumptions {
            ground_truth: match cfg.ground_truth {
                crate::config::GroundTruthConfig::Sample => "sample covariance of the realized snapshots",
                crate::config::GroundTruthConfig::Ensemble => "ensemble covariance over unit-power gains",
            },
            snr_definition: "mean ||Phi vec(H_t)||^2 over snapshots / (sigma^2 * M_RF * ||W||_F^2)",
            rf_chain_pairs: cfg.rf_chains()?,
            sensing_redrawn_per_trial: true,
            seed_inputs: "master_seed, M_RF, N_RF, snr_db, trial",
            metric_rank: cfg.rank(),
            on_grid: cfg.on_grid,
            failed_rows: "NaN metrics, excluded from agg.csv and counted in n_excluded",
        },
        rows: rows.len(),
        failed_rows: rows.iter().filter(|r| r.failed()).count(),
    };
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::to_writer_pretty(&file, &manifest)?;
    (&file).write_all(b"\n").map_err(|e| HarnessError::io(path, e))
}

/// Paths written by [`run_to_dir`].
#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub raw: PathBuf,
    pub agg: PathBuf,
    pub meta: PathBuf,
    pub rows: Vec<TrialResult>,
}

/// Runs the sweep and writes `raw.csv`, `agg.csv` and `meta.json` into `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> Result<RunOutputs> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let partial = out_dir.join("raw.partial.csv");
    let mut w = csv_writer(&partial)?;
    w.write_record(RAW_HEADER)?;
    let rows = run_sweep_with(cfg, workers, |row| {
        w.write_record(raw_record(row))?;
        w.flush().map_err(|e| HarnessError::io(&partial, e))
    })?;
    drop(w);

    let raw = out_dir.join("raw.csv");
    let agg = out_dir.join("agg.csv");
    let meta = out_dir.join("meta.json");
    write_raw(&raw, &rows)?;
    write_agg(&agg, &aggregate(&rows))?;
    write_meta(&meta, cfg, &rows)?;
    fs::remove_file(&partial).map_err(|e| HarnessError::io(&partial, e))?;
    Ok(RunOutputs { raw, agg, meta, rows })
}
