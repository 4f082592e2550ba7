//! Experiment configuration, read from TOML.
//!
//! Keys mirror the field names below exactly and unknown keys are rejected. `M_RF` and
//! `N_RF` take either a single chain count or equal-length lists that are zipped into
//! `(M_RF, N_RF)` pairs, which is how a sweep over the measurement count `m` is written.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ppcomp_core::estimators::{GammaMode, SolverOptions};
use ppcomp_core::metrics::CovarianceSource;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    Comp,
    Ppcomp,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Comp => "COMP",
            Algorithm::Ppcomp => "PPCOMP",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "COMP" => Ok(Algorithm::Comp),
            "PPCOMP" => Ok(Algorithm::Ppcomp),
            other => Err(HarnessError::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaModeConfig {
    #[default]
    Joint,
    PerPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthConfig {
    #[default]
    Sample,
    Ensemble,
}

/// `[solver]` section. Missing keys fall back to the library defaults for `K·L` paths.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon_rel: Option<f64>,
    pub k_max: Option<usize>,
    pub p_max: Option<usize>,
    pub step_init: Option<f64>,
    pub step_shrink: Option<f64>,
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub gamma_mode: GammaModeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ExperimentConfig {
    pub M: usize,
    pub N: usize,
    #[serde(default = "default_m_rf")]
    pub M_RF: OneOrMany<usize>,
    #[serde(default = "default_n_rf")]
    pub N_RF: OneOrMany<usize>,
    pub K: usize,
    pub L: usize,
    /// `[G_UE, G_BS]` pairs.
    pub grid_sizes: Vec<[usize; 2]>,
    pub snapshot_counts: Vec<usize>,
    /// SNR values in dB; `inf` gives noiseless snapshots.
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Subspace rank for `η`; defaults to `K·L`.
    pub metric_rank: Option<usize>,
    pub master_seed: u64,
    /// Snap every drawn angle onto its grid point (inverse-crime runs).
    #[serde(default)]
    pub on_grid: bool,
    #[serde(default)]
    pub ground_truth: GroundTruthConfig,
}

fn default_m_rf() -> OneOrMany<usize> {
    OneOrMany::Many(vec![2, 4, 4])
}

fn default_n_rf() -> OneOrMany<usize> {
    OneOrMany::Many(vec![2, 2, 3])
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn n_paths(&self) -> usize {
        self.K * self.L
    }

    /// Zipped `(M_RF, N_RF)` pairs; a scalar on one side is broadcast.
    pub fn rf_chains(&self) -> Result<Vec<(usize, usize)>> {
        let (m, n) = (self.M_RF.to_vec(), self.N_RF.to_vec());
        let len = match (m.len(), n.len()) {
            (a, b) if a == b => a,
            (1, b) => b,
            (a, 1) => a,
            (a, b) => {
                return Err(HarnessError::Config(format!(
                    "M_RF has {a} entries but N_RF has {b}"
                )))
            }
        };
        Ok((0..len)
            .map(|i| (m[i.min(m.len() - 1)], n[i.min(n.len() - 1)]))
            .collect())
    }

    pub fn solver_options(&self) -> SolverOptions {
        let base = SolverOptions::for_paths(self.n_paths());
        let s = &self.solver;
        SolverOptions {
            epsilon_rel: s.epsilon_rel.unwrap_or(base.epsilon_rel),
            k_max: s.k_max.unwrap_or(base.k_max),
            p_max: s.p_max.unwrap_or(base.p_max),
            step_init: s.step_init.unwrap_or(base.step_init),
            step_shrink: s.step_shrink.unwrap_or(base.step_shrink),
            grad_tol: s.grad_tol.unwrap_or(base.grad_tol),
            gamma_mode: match s.gamma_mode {
                GammaModeConfig::Joint => GammaMode::Joint,
                GammaModeConfig::PerPair => GammaMode::PerPair,
            },
        }
    }

    pub fn rank(&self) -> usize {
        self.metric_rank.unwrap_or(self.n_paths())
    }

    pub fn covariance_source(&self) -> CovarianceSource {
        match self.ground_truth {
            GroundTruthConfig::Sample => CovarianceSource::Sample,
            GroundTruthConfig::Ensemble => CovarianceSource::Ensemble,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.M == 0 || self.N == 0 || self.K == 0 || self.L == 0 || self.trials == 0 {
            return bad("M, N, K, L and trials must be positive");
        }
        for (m_rf, n_rf) in self.rf_chains()? {
            if m_rf == 0 || n_rf == 0 {
                return bad("RF chain counts must be positive");
            }
            if m_rf > self.M || n_rf > self.N {
                return bad("RF chain counts cannot exceed the antenna counts");
            }
        }
        if self.grid_sizes.is_empty() || self.grid_sizes.iter().flatten().any(|&g| g == 0) {
            return bad("grid_sizes must be a non-empty list of positive [G_UE, G_BS] pairs");
        }
        if self.snapshot_counts.is_empty() || self.snapshot_counts.contains(&0) {
            return bad("snapshot_counts must be a non-empty list of positive counts");
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return bad("snr_db must be a non-empty list of finite values or inf");
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must name at least one of COMP, PPCOMP");
        }
        let rank = self.rank();
        if rank == 0 || rank > self.M * self.N {
            return bad("metric_rank must be between 1 and M·N");
        }
        self.solver_options()
            .validate()
            .map_err(|e| HarnessError::Config(format!("solver: {e}")))
    }
}
