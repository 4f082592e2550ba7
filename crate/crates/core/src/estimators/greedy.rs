use alloc::vec::Vec;

use super::gamma::gamma_ls;
use super::residual::residual_from;
use super::selection::project_select;
use super::solver::perturbation_solver;
use super::{CovarianceEstimate, SolverOptions, SupportState};
use crate::grid::{composed_dictionary, Dictionary, SensingOperator};
use crate::linalg::{frobenius_sq, hermitian_asymmetry};
use crate::{CMatrix, Error, Result};

/// Asymmetry above which an input covariance is rejected.
const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Parameter-perturbed covariance OMP.
pub fn ppcomp(
    r_y: &CMatrix,
    dict: &Dictionary,
    phi: &SensingOperator,
    opts: &SolverOptions,
) -> Result<CovarianceEstimate> {
    greedy(r_y, dict, phi, opts, true)
}

/// Covariance OMP on the fixed grid: every atom stays at its grid point.
pub fn comp(
    r_y: &CMatrix,
    dict: &Dictionary,
    phi: &SensingOperator,
    opts: &SolverOptions,
) -> Result<CovarianceEstimate> {
    greedy(r_y, dict, phi, opts, false)
}

fn greedy(
    r_y: &CMatrix,
    dict: &Dictionary,
    phi: &SensingOperator,
    opts: &SolverOptions,
    perturb: bool,
) -> Result<CovarianceEstimate> {
    opts.validate()?;
    let m = phi.measurements();
    if r_y.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            what: "measurement covariance size",
            expected: m,
            found: r_y.nrows(),
        });
    }
    let asym = hermitian_asymmetry(r_y);
    if asym > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(asym));
    }
    let composed = composed_dictionary(dict, phi)?;

    let total = frobenius_sq(r_y);
    let mut support = SupportState::empty(dict.n_bs(), dict.n_ue());
    let mut residual = r_y.clone();
    let mut error = total;
    let mut residual_history = Vec::new();
    let mut solver_iterations = Vec::new();
    let mut rank_deficient = false;
    let mut degenerate_atoms = false;

    while support.len() < opts.k_max && support.len() < dict.len() {
        if total == 0.0 || error / total < opts.epsilon_rel {
            break;
        }
        let j = project_select(&residual, &composed, &support.indices)?;
        support.push(dict, j)?;
        if perturb {
            let report = perturbation_solver(r_y, support, phi, opts)?;
            rank_deficient |= report.rank_deficient;
            degenerate_atoms |= report.frozen.iter().any(|&f| f);
            solver_iterations.push(report.iterations);
            support = report.support;
        } else {
            let v = support.compressed_atoms(phi);
            let fit = gamma_ls(r_y, &v, opts.gamma_mode)?;
            rank_deficient |= fit.rank_deficient;
            solver_iterations.push(0);
            support.gamma = fit.gamma;
        }
        residual = residual_from(r_y, &support.compressed_atoms(phi), &support.gamma);
        error = frobenius_sq(&residual);
        residual_history.push(error);
    }

    let r_h_hat = if support.is_empty() {
        let n = dict.n_bs() * dict.n_ue();
        CMatrix::zeros(n, n)
    } else {
        support.channel_covariance()
    };
    Ok(CovarianceEstimate {
        r_h_hat,
        support,
        residual_history,
        solver_iterations,
        rank_deficient,
        degenerate_atoms,
    })
}
