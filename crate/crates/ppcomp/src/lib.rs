//! Experiment harness for the `ppcomp-core` estimators: TOML configuration, seeded
//! paired Monte-Carlo trials, parallel sweeps and CSV/JSON output.

pub mod config;
pub mod error;
pub mod harness;
pub mod output;
pub mod smoke;

pub use config::{Algorithm, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use harness::{run_sweep_rows, run_trial, trial_seed, Coordinate, TrialResult};
pub use output::run_to_dir;
pub use ppcomp_core as core;
