//! Bounded alternating solver for the angle perturbations and `Γ`.
//!
//! Each iteration refits `Γ` at the current angles, forms the residual covariance,
//! computes descent directions and takes a projected step that keeps every angle inside
//! its grid cell. Steps are taken in the direction cosines `u = cos θ`: the array phase is
//! linear in `u`, so the derivative never vanishes, whereas `∂a/∂θ` is zero at endfire and
//! a grid point at `θ = 0` would otherwise be a false stationary point. The step is
//! `μ · w · d` per coordinate, with `w` the cell width in `u` along that axis. The first
//! `μ` makes the largest move `step_init` of a cell; later ones use a Barzilai-Borwein
//! estimate, capped the same way. Backtracking from there keeps the residual from
//! increasing.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::ComplexField;

use super::gamma::gamma_ls;
use super::residual::{cos_directions, residual_from};
use super::{compressed_atoms, AnglePair, SolverOptions, SupportState};
use crate::grid::{PerturbationBounds, SensingOperator};
use crate::linalg::frobenius_sq;
use crate::{CMatrix, Error, Result};

/// Compressed atoms whose normalized correlation exceeds this are considered collapsed.
const COLLAPSE_CORRELATION: f64 = 0.999;
const MAX_SHRINKS: usize = 20;
const MIN_RELATIVE_DECREASE: f64 = 1e-8;

/// Result of one [`perturbation_solver`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Support at the final angles with `Γ` refitted there.
    pub support: SupportState,
    /// `‖R_y⊥‖²_F` at the starting point and after every accepted step.
    pub residual_trace: Vec<f64>,
    /// Angles at the starting point and after every accepted step.
    pub angle_trace: Vec<Vec<AnglePair>>,
    /// Number of accepted steps.
    pub iterations: usize,
    pub rank_deficient: bool,
    /// Atoms held at their grid point because they collapsed onto an earlier atom.
    pub frozen: Vec<bool>,
}

struct Fit {
    v: CMatrix,
    gamma: CMatrix,
    residual: CMatrix,
    error: f64,
    rank_deficient: bool,
}

fn fit(r_y: &CMatrix, angles: &[AnglePair], phi: &SensingOperator, opts: &SolverOptions) -> Result<Fit> {
    let v = compressed_atoms(angles, phi);
    let g = gamma_ls(r_y, &v, opts.gamma_mode)?;
    let residual = residual_from(r_y, &v, &g.gamma);
    let error = frobenius_sq(&residual);
    Ok(Fit {
        v,
        gamma: g.gamma,
        residual,
        error,
        rank_deficient: g.rank_deficient,
    })
}

/// Resets every later atom that collapsed onto an earlier one to its grid point.
/// Returns the indices that were reset.
fn release_collapsed(angles: &mut [AnglePair], base: &[AnglePair], phi: &SensingOperator) -> Vec<usize> {
    let mut reset = Vec::new();
    for l in 1..angles.len() {
        let vl = phi.compressed_atom(angles[l].rx, angles[l].tx);
        let nl = vl.norm();
        let collapsed = (0..l).any(|q| {
            let vq = phi.compressed_atom(angles[q].rx, angles[q].tx);
            let denom = nl * vq.norm();
            denom > 0.0 && vq.dotc(&vl).modulus() / denom > COLLAPSE_CORRELATION
        });
        if collapsed && angles[l] != base[l] {
            angles[l] = base[l];
            reset.push(l);
        } else if collapsed {
            reset.push(l);
        }
    }
    reset
}

/// Runs the perturbation solver from the support's current angles.
pub fn perturbation_solver(
    r_y: &CMatrix,
    support: SupportState,
    phi: &SensingOperator,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    opts.validate()?;
    if support.is_empty() {
        return Err(Error::InvalidParameter("perturbation solver needs a non-empty support"));
    }
    let m = phi.measurements();
    if r_y.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            what: "measurement covariance size",
            expected: m,
            found: r_y.nrows(),
        });
    }
    let k = support.len();
    let base = support.base_angles.clone();
    let bounds = support.bounds.clone();
    let mut angles: Vec<AnglePair> = support
        .current_angles
        .iter()
        .zip(&base)
        .zip(&bounds)
        .map(|((cur, b), cell)| AnglePair::new(cell.rx.clamp(b.rx, cur.rx), cell.tx.clamp(b.tx, cur.tx)))
        .collect();

    let mut frozen = vec![false; k];
    for l in release_collapsed(&mut angles, &base, phi) {
        frozen[l] = true;
    }

    let cells: Vec<[CosCell; 2]> = base
        .iter()
        .zip(&bounds)
        .map(|(b, cell)| [CosCell::new(b.rx, cell.rx), CosCell::new(b.tx, cell.tx)])
        .collect();

    let mut current = fit(r_y, &angles, phi, opts)?;
    let mut rank_deficient = current.rank_deficient;
    let mut residual_trace = vec![current.error];
    let mut angle_trace = vec![angles.clone()];
    let mut iterations = 0;
    let mut mu: Option<f64> = None;
    let mut last_move: Option<(Vec<AnglePair>, Vec<f64>, Vec<f64>)> = None;

    for _ in 0..opts.p_max {
        let (mut d_rx, mut d_tx) = cos_directions(&angles, &current.v, &current.gamma, &current.residual, phi);
        for l in 0..k {
            let [c_rx, c_tx] = &cells[l];
            if frozen[l] || c_rx.blocks(angles[l].rx, d_rx[l]) {
                d_rx[l] = 0.0;
            }
            if frozen[l] || c_tx.blocks(angles[l].tx, d_tx[l]) {
                d_tx[l] = 0.0;
            }
        }
        let d_max = d_rx.iter().chain(&d_tx).fold(0.0f64, |acc, d| acc.max(d.abs()));
        if d_max == 0.0 || !d_max.is_finite() {
            break;
        }
        let cap = opts.step_init / d_max;
        let guess = match (&last_move, mu) {
            (Some((prev, p_rx, p_tx)), Some(m)) => {
                barzilai_borwein(prev, &angles, p_rx, p_tx, &d_rx, &d_tx, &cells).unwrap_or(2.0 * m)
            }
            (None, Some(m)) => 2.0 * m,
            _ => cap,
        };
        let mut step = guess.min(cap);

        let mut accepted = None;
        for _ in 0..=MAX_SHRINKS {
            let mut candidate: Vec<AnglePair> = (0..k)
                .map(|l| {
                    let [c_rx, c_tx] = &cells[l];
                    AnglePair::new(
                        c_rx.step(angles[l].rx, step * d_rx[l]),
                        c_tx.step(angles[l].tx, step * d_tx[l]),
                    )
                })
                .collect();
            let newly_frozen = release_collapsed(&mut candidate, &base, phi);
            let moved = max_change(&angles, &candidate);
            if moved == 0.0 {
                break;
            }
            let trial = fit(r_y, &candidate, phi, opts)?;
            if trial.error <= current.error {
                accepted = Some((candidate, trial, newly_frozen, moved));
                break;
            }
            step *= opts.step_shrink;
        }

        let Some((candidate, trial, newly_frozen, moved)) = accepted else {
            break;
        };
        for l in newly_frozen {
            frozen[l] = true;
        }
        let previous = current.error;
        last_move = Some((angles.clone(), d_rx, d_tx));
        angles = candidate;
        current = trial;
        rank_deficient |= current.rank_deficient;
        residual_trace.push(current.error);
        angle_trace.push(angles.clone());
        iterations += 1;
        mu = Some(step);
        if moved < opts.grad_tol || previous - current.error <= MIN_RELATIVE_DECREASE * previous {
            break;
        }
    }

    let mut out = support;
    out.current_angles = angles;
    out.gamma = current.gamma;
    Ok(SolverReport {
        support: out,
        residual_trace,
        angle_trace,
        iterations,
        rank_deficient,
        frozen,
    })
}

/// One axis of a cell in direction-cosine coordinates.
struct CosCell {
    center: f64,
    bounds: PerturbationBounds,
    /// `cos` of the upper and lower angle edges.
    u_min: f64,
    u_max: f64,
}

impl CosCell {
    fn new(center: f64, bounds: PerturbationBounds) -> Self {
        let (lo, hi) = bounds.interval(center);
        Self {
            center,
            bounds,
            u_min: hi.cos(),
            u_max: lo.cos(),
        }
    }

    fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    /// Whether `θ` sits on an edge and `d` points out of the cell. Increasing `u` lowers `θ`.
    fn blocks(&self, theta: f64, d: f64) -> bool {
        let (lo, hi) = self.bounds.interval(self.center);
        (theta <= lo && d > 0.0) || (theta >= hi && d < 0.0)
    }

    /// Moves `cos θ` by `scaled · width` and maps back into the angle cell.
    fn step(&self, theta: f64, scaled: f64) -> f64 {
        let u = (theta.cos() + scaled * self.width()).max(self.u_min).min(self.u_max);
        self.bounds.clamp(self.center, u.acos())
    }
}

/// Barzilai-Borwein `sᵀs / sᵀy` in the coordinates `u / √w`, where the update is a plain
/// gradient step. `None` without positive curvature along the last move.
fn barzilai_borwein(
    prev: &[AnglePair],
    now: &[AnglePair],
    prev_rx: &[f64],
    prev_tx: &[f64],
    d_rx: &[f64],
    d_tx: &[f64],
    cells: &[[CosCell; 2]],
) -> Option<f64> {
    let (mut ss, mut sy) = (0.0, 0.0);
    for l in 0..now.len() {
        let s_rx = now[l].rx.cos() - prev[l].rx.cos();
        let s_tx = now[l].tx.cos() - prev[l].tx.cos();
        ss += s_rx * s_rx / cells[l][0].width() + s_tx * s_tx / cells[l][1].width();
        sy += s_rx * (prev_rx[l] - d_rx[l]) + s_tx * (prev_tx[l] - d_tx[l]);
    }
    (sy > 0.0 && ss > 0.0).then(|| ss / sy).filter(|x| x.is_finite())
}

fn max_change(a: &[AnglePair], b: &[AnglePair]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.rx - y.rx).abs().max((x.tx - y.tx).abs()))
        .fold(0.0, f64::max)
}
