//! On-grid, noiseless inverse-crime run used by `ppcomp smoke`.
//!
//! Selection maximizes an unnormalized quadratic form, so under random phase sensing
//! an unlucky draw can still pick wrong atoms. The smoke run measures every
//! antenna pair (`m = M·N`) and allows twice the usual support to keep that rare; the
//! seed is fixed, so the outcome is deterministic. The data are noiseless, so the greedy
//! loop runs to a near machine-precision residual instead of a noise-level one; stopping
//! at 1e-3 can leave a PPCOMP atom parked off its grid point.

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::harness::{run_sweep_rows, TrialResult};

/// Every row must reach at least this `η`.
pub const SMOKE_MIN_ETA: f64 = 0.99;

pub const SMOKE_CONFIG: &str = r#"
M = 8
N = 4
M_RF = 8
N_RF = 4
K = 1
L = 2
grid_sizes = [[4, 8]]
snapshot_counts = [50]
snr_db = [inf]
trials = 20
algorithms = ["COMP", "PPCOMP"]
master_seed = 1
on_grid = true

[solver]
k_max = 8
epsilon_rel = 1e-10
"#;

pub fn smoke_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(SMOKE_CONFIG).expect("built-in smoke config is valid")
}

/// Runs the smoke config and returns the rows that fell short of [`SMOKE_MIN_ETA`].
pub fn run_smoke(workers: Option<usize>) -> Result<(Vec<TrialResult>, Vec<TrialResult>)> {
    let rows = run_sweep_rows(&smoke_config(), workers)?;
    let bad = rows
        .iter()
        .filter(|r| r.failed() || r.eta <= SMOKE_MIN_ETA)
        .cloned()
        .collect();
    Ok((rows, bad))
}
