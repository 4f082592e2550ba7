//! Seeded Monte-Carlo trials and sweeps.
//!
//! A trial draws one channel, one sensing operator and one noise realization and runs
//! every configured algorithm on the same measurement covariance, so COMP and PPCOMP
//! rows are paired. The generator is seeded from the master seed, the RF chain pair,
//! the SNR and the trial index. Grid size and snapshot count are left out of the seed,
//! so the same trial index sees the same angles and sensing operator across grids and
//! the same leading snapshots across `T`.

use std::collections::{BTreeMap, HashMap};
use std::sync::mpsc;
use std::time::Instant;

use ppcomp_core::channel::{draw_mpcs, generate_snapshots, noiseless_measurements, realize_channel, MpcSet};
use ppcomp_core::estimators::{comp, ppcomp, sample_covariance, CovarianceEstimate, SolverOptions};
use ppcomp_core::grid::{build_dictionary, build_grid, build_sensing, AngularGrid, Dictionary, SensingOperator};
use ppcomp_core::metrics::{nmse, relative_efficiency, true_covariance};
use ppcomp_core::CMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// One point of the sweep, without the algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    /// `G_UE`, receive-side grid size.
    pub grid_rx: usize,
    /// `G_BS`, transmit-side grid size.
    pub grid_tx: usize,
    pub snapshots: usize,
    pub m_rf: usize,
    pub n_rf: usize,
    pub snr_db: f64,
}

impl Coordinate {
    pub fn measurements(&self) -> usize {
        self.m_rf * self.n_rf
    }
}

/// One CSV row. Failed estimates carry `NaN` metrics and a zero support size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub grid_rx: usize,
    pub grid_tx: usize,
    #[serde(rename = "T")]
    pub snapshots: usize,
    pub m: usize,
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub trial: usize,
    pub eta: f64,
    pub nmse: f64,
    pub support_size: usize,
    pub final_residual: f64,
    pub wall_time_ms: f64,
    pub seed: u64,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        !(self.eta.is_finite() && self.nmse.is_finite())
    }
}

pub const RAW_HEADER: [&str; 13] = [
    "grid_rx",
    "grid_tx",
    "T",
    "m",
    "snr_db",
    "algorithm",
    "trial",
    "eta",
    "nmse",
    "support_size",
    "final_residual",
    "wall_time_ms",
    "seed",
];

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed. Depends on the master seed, `(M_RF, N_RF)`, the SNR and the trial.
pub fn trial_seed(master_seed: u64, coord: &Coordinate, trial: usize) -> u64 {
    [coord.m_rf as u64, coord.n_rf as u64, coord.snr_db.to_bits(), trial as u64]
        .into_iter()
        .fold(mix(master_seed), |h, w| mix(h ^ w))
}

/// Builds the `G_UE × G_BS` dictionary for `cfg`'s arrays.
pub fn dictionary_for(cfg: &ExperimentConfig, grid_rx: usize, grid_tx: usize) -> Result<Dictionary> {
    Ok(build_dictionary(build_grid(grid_rx)?, build_grid(grid_tx)?, cfg.M, cfg.N)?)
}

fn nearest_point(grid: &AngularGrid, theta: f64) -> f64 {
    grid.angles()
        .iter()
        .copied()
        .min_by(|a, b| (a - theta).abs().total_cmp(&(b - theta).abs()))
        .expect("grids are non-empty")
}

fn snap_to_grid(mpcs: &MpcSet, dict: &Dictionary) -> Result<MpcSet> {
    let aoa = mpcs.aoa.iter().map(|&t| nearest_point(&dict.grid_rx, t)).collect();
    let aod = mpcs.aod.iter().map(|&t| nearest_point(&dict.grid_tx, t)).collect();
    Ok(MpcSet::new(mpcs.n_clusters, mpcs.paths_per_cluster, aoa, aod)?)
}

/// Measurement covariance and reference channel covariance of one trial.
pub struct TrialData {
    pub phi: SensingOperator,
    pub r_y: CMatrix,
    pub r_h: CMatrix,
    pub noise_variance: f64,
}

/// Draws the channel, sensing operator and noisy snapshots of one trial.
pub fn simulate(cfg: &ExperimentConfig, dict: &Dictionary, coord: &Coordinate, seed: u64) -> Result<TrialData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mpcs = draw_mpcs(cfg.K, cfg.L, &mut rng)?;
    if cfg.on_grid {
        mpcs = snap_to_grid(&mpcs, dict)?;
    }
    let phi = build_sensing(cfg.M, coord.m_rf, cfg.N, coord.n_rf, &mut rng)?;
    let chan = realize_channel(&mpcs, coord.snapshots, cfg.M, cfg.N, &mut rng)?;
    let noise_variance = if coord.snr_db == f64::INFINITY {
        0.0
    } else {
        let clean = noiseless_measurements(&chan, &phi)?;
        let signal = clean.iter().map(|y| y.norm_squared()).sum::<f64>() / clean.len() as f64;
        signal / (10f64.powf(coord.snr_db / 10.0) * phi.combined_noise_power(1.0))
    };
    let snaps = generate_snapshots(&chan, &phi, noise_variance, &mut rng)?;
    let r_y = sample_covariance(&snaps)?;
    let r_h = true_covariance(&chan, cfg.covariance_source()).r_h;
    Ok(TrialData {
        phi,
        r_y,
        r_h,
        noise_variance,
    })
}

fn estimate(
    algorithm: Algorithm,
    r_y: &CMatrix,
    dict: &Dictionary,
    phi: &SensingOperator,
    opts: &SolverOptions,
) -> ppcomp_core::Result<CovarianceEstimate> {
    match algorithm {
        Algorithm::Comp => comp(r_y, dict, phi, opts),
        Algorithm::Ppcomp => ppcomp(r_y, dict, phi, opts),
    }
}

/// Runs every configured algorithm on one shared realization.
///
/// Failures never abort: they come back as rows with `NaN` metrics and are reported on
/// stderr.
pub fn run_trial(cfg: &ExperimentConfig, dict: &Dictionary, coord: &Coordinate, trial: usize) -> Vec<TrialResult> {
    let seed = trial_seed(cfg.master_seed, coord, trial);
    let row = |algorithm: Algorithm| TrialResult {
        grid_rx: coord.grid_rx,
        grid_tx: coord.grid_tx,
        snapshots: coord.snapshots,
        m: coord.measurements(),
        snr_db: coord.snr_db,
        algorithm,
        trial,
        eta: f64::NAN,
        nmse: f64::NAN,
        support_size: 0,
        final_residual: f64::NAN,
        wall_time_ms: 0.0,
        seed,
    };
    let data = match simulate(cfg, dict, coord, seed) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("trial {trial} at {coord:?}: simulation failed: {e}");
            return cfg.algorithms.iter().map(|&a| row(a)).collect();
        }
    };
    let opts = cfg.solver_options();
    let rank = cfg.rank();
    cfg.algorithms
        .iter()
        .map(|&algorithm| {
            let mut out = row(algorithm);
            let start = Instant::now();
            let est = estimate(algorithm, &data.r_y, dict, &data.phi, &opts);
            out.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
            let scored = est.and_then(|est| {
                let eta = relative_efficiency(&est.r_h_hat, &data.r_h, rank)?;
                let err = nmse(&est.r_h_hat, &data.r_h)?;
                Ok((est, eta, err))
            });
            match scored {
                Ok((est, eta, err)) => {
                    out.eta = eta;
                    out.nmse = err;
                    out.support_size = est.support.len();
                    out.final_residual = est.final_residual();
                }
                Err(e) => eprintln!("trial {trial} at {coord:?}: {algorithm} failed: {e}"),
            }
            out
        })
        .collect()
}

/// Every coordinate of the sweep, in output order.
pub fn coordinates(cfg: &ExperimentConfig) -> Result<Vec<Coordinate>> {
    let chains = cfg.rf_chains()?;
    let mut out = Vec::new();
    for &[grid_rx, grid_tx] in &cfg.grid_sizes {
        for &snapshots in &cfg.snapshot_counts {
            for &(m_rf, n_rf) in &chains {
                for &snr_db in &cfg.snr_db {
                    out.push(Coordinate {
                        grid_rx,
                        grid_tx,
                        snapshots,
                        m_rf,
                        n_rf,
                        snr_db,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Runs the whole sweep on `workers` threads (all cores when `None`).
///
/// `sink` sees every row once, in completion order, on the calling thread. The returned
/// rows are in coordinate, trial, algorithm order regardless of scheduling.
pub fn run_sweep_with<F>(cfg: &ExperimentConfig, workers: Option<usize>, mut sink: F) -> Result<Vec<TrialResult>>
where
    F: FnMut(&TrialResult) -> Result<()>,
{
    cfg.validate()?;
    let coords = coordinates(cfg)?;
    let mut dicts = HashMap::new();
    for c in &coords {
        if let std::collections::hash_map::Entry::Vacant(e) = dicts.entry((c.grid_rx, c.grid_tx)) {
            e.insert(dictionary_for(cfg, c.grid_rx, c.grid_tx)?);
        }
    }
    let units: Vec<(usize, usize)> = (0..coords.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;

    let (tx, rx) = mpsc::channel::<(usize, usize, Vec<TrialResult>)>();
    let mut collected = Vec::with_capacity(units.len());
    let mut sink_error = None;
    std::thread::scope(|scope| {
        let dicts = &dicts;
        let coords = &coords;
        let units = &units;
        scope.spawn(move || {
            pool.install(|| {
                units.par_iter().for_each_with(tx, |tx, &(c, t)| {
                    let coord = &coords[c];
                    let rows = run_trial(cfg, &dicts[&(coord.grid_rx, coord.grid_tx)], coord, t);
                    // The receiver only disappears if the writer failed; nothing to do then.
                    let _ = tx.send((c, t, rows));
                });
            });
        });
        for (c, t, rows) in rx {
            if sink_error.is_none() {
                for row in &rows {
                    if let Err(e) = sink(row) {
                        sink_error = Some(e);
                        break;
                    }
                }
            }
            collected.push((c, t, rows));
        }
    });
    if let Some(e) = sink_error {
        return Err(e);
    }
    collected.sort_by_key(|&(c, t, _)| (c, t));
    let algo_rank: HashMap<Algorithm, usize> = cfg.algorithms.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    Ok(collected
        .into_iter()
        .flat_map(|(_, _, mut rows)| {
            rows.sort_by_key(|r| algo_rank[&r.algorithm]);
            rows
        })
        .collect())
}

/// [`run_sweep_with`] without a row sink.
pub fn run_sweep_rows(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<TrialResult>> {
    run_sweep_with(cfg, workers, |_| Ok(()))
}

/// Per-coordinate, per-algorithm summary. Failed trials are excluded and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub grid_rx: usize,
    pub grid_tx: usize,
    #[serde(rename = "T")]
    pub snapshots: usize,
    pub m: usize,
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub n_trials: usize,
    pub n_excluded: usize,
    pub eta_mean: f64,
    pub eta_std: f64,
    pub nmse_mean: f64,
    pub nmse_std: f64,
}

pub const AGG_HEADER: [&str; 12] = [
    "grid_rx",
    "grid_tx",
    "T",
    "m",
    "snr_db",
    "algorithm",
    "n_trials",
    "n_excluded",
    "eta_mean",
    "eta_std",
    "nmse_mean",
    "nmse_std",
];

/// Mean and sample standard deviation; `NaN` when undefined.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by coordinate and algorithm, keeping first-seen order.
pub fn aggregate(rows: &[TrialResult]) -> Vec<AggregateRow> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<usize, Vec<&TrialResult>> = BTreeMap::new();
    let mut index = HashMap::new();
    for r in rows {
        let key = (r.grid_rx, r.grid_tx, r.snapshots, r.m, r.snr_db.to_bits(), r.algorithm);
        let slot = *index.entry(key).or_insert_with(|| {
            order.push(r);
            order.len() - 1
        });
        groups.entry(slot).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(slot, members)| {
            let head = order[slot];
            let ok: Vec<&TrialResult> = members.iter().copied().filter(|r| !r.failed()).collect();
            let etas: Vec<f64> = ok.iter().map(|r| r.eta).collect();
            let errs: Vec<f64> = ok.iter().map(|r| r.nmse).collect();
            let (eta_mean, eta_std) = mean_std(&etas);
            let (nmse_mean, nmse_std) = mean_std(&errs);
            AggregateRow {
                grid_rx: head.grid_rx,
                grid_tx: head.grid_tx,
                snapshots: head.snapshots,
                m: head.m,
                snr_db: head.snr_db,
                algorithm: head.algorithm,
                n_trials: members.len(),
                n_excluded: members.len() - ok.len(),
                eta_mean,
                eta_std,
                nmse_mean,
                nmse_std,
            }
        })
        .collect()
}
