//! Covariance estimators: the measurement covariance, covariance OMP (COMP) and the
//! parameter-perturbed variant (PPCOMP).
//!
//! Both greedy estimators fit
//!
//! ```text
//! R_y ≈ Φ ( Σ_{l,q} Γ_{l,q} a_res(Θ_l) a_res(Θ_q)ᴴ ) Φᴴ
//! ```
//!
//! one atom at a time. COMP keeps each atom at its grid point; PPCOMP moves every
//! selected angle pair inside its grid cell with a bounded projected-gradient solver.

mod covariance;
mod gamma;
mod greedy;
mod residual;
mod selection;
mod solver;

use alloc::vec::Vec;

pub use covariance::sample_covariance;
pub use gamma::{gamma_ls, GammaFit};
pub use greedy::{comp, ppcomp};
pub use residual::{gradient_directions, residual_covariance};
pub use selection::project_select;
pub use solver::{perturbation_solver, SolverReport};

use crate::grid::{atom, Dictionary, PerturbationBounds, SensingOperator};
use crate::{CMatrix, Error, Result};

/// How `Γ` is fitted to the measurement covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaMode {
    /// `Γ = V⁺ R_y (V⁺)ᴴ` over all selected compressed atoms `V` at once.
    #[default]
    Joint,
    /// `Γ_{l,q} = v_l⁺ R_y (v_q⁺)ᴴ` with single-vector pseudo-inverses, one pair at a time.
    PerPair,
}

/// Stopping rules and step control for the greedy loop and the perturbation solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `‖R_y⊥‖²_F / ‖R_y‖²_F` drops below this.
    pub epsilon_rel: f64,
    /// Maximum number of selected atoms.
    pub k_max: usize,
    /// Maximum perturbation iterations per greedy step.
    pub p_max: usize,
    /// Largest first step as a fraction of the cell width.
    pub step_init: f64,
    /// Backtracking factor.
    pub step_shrink: f64,
    /// Convergence threshold on the largest angle update, in radians.
    pub grad_tol: f64,
    pub gamma_mode: GammaMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::for_paths(4)
    }
}

impl SolverOptions {
    /// Defaults for a channel with `n_paths` multipath components (`k_max = 2·n_paths`).
    pub fn for_paths(n_paths: usize) -> Self {
        Self {
            epsilon_rel: 1e-3,
            k_max: 2 * n_paths.max(1),
            p_max: 50,
            step_init: 0.25,
            step_shrink: 0.5,
            grad_tol: 1e-6,
            gamma_mode: GammaMode::Joint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.epsilon_rel > 0.0
            && self.k_max > 0
            && self.p_max > 0
            && self.step_init > 0.0
            && self.step_shrink > 0.0
            && self.grad_tol > 0.0;
        if !positive {
            return Err(Error::InvalidParameter("solver options must all be positive"));
        }
        if self.step_shrink >= 1.0 {
            return Err(Error::InvalidParameter("step_shrink must be below 1"));
        }
        Ok(())
    }
}

/// An AoA/AoD pair in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    pub rx: f64,
    pub tx: f64,
}

impl AnglePair {
    pub fn new(rx: f64, tx: f64) -> Self {
        Self { rx, tx }
    }
}

/// Perturbation bounds of one selected atom along both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBounds {
    pub rx: PerturbationBounds,
    pub tx: PerturbationBounds,
}

/// Selected atoms, their grid and perturbed angles, and the fitted `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportState {
    pub indices: Vec<usize>,
    pub base_angles: Vec<AnglePair>,
    pub current_angles: Vec<AnglePair>,
    pub bounds: Vec<CellBounds>,
    /// Hermitian `k × k`.
    pub gamma: CMatrix,
    n_bs: usize,
    n_ue: usize,
}

impl SupportState {
    pub fn empty(n_bs: usize, n_ue: usize) -> Self {
        Self {
            indices: Vec::new(),
            base_angles: Vec::new(),
            current_angles: Vec::new(),
            bounds: Vec::new(),
            gamma: CMatrix::zeros(0, 0),
            n_bs,
            n_ue,
        }
    }

    /// Adds dictionary column `j` at its grid angles; `Γ` grows with a zero row and column.
    pub fn push(&mut self, dict: &Dictionary, j: usize) -> Result<()> {
        if self.indices.contains(&j) {
            return Err(Error::InvalidParameter("atom already in the support"));
        }
        let (rx_b, tx_b) = dict.bounds(j)?;
        let (rx, tx) = dict.base_angles(j);
        self.indices.push(j);
        self.base_angles.push(AnglePair::new(rx, tx));
        self.current_angles.push(AnglePair::new(rx, tx));
        self.bounds.push(CellBounds { rx: rx_b, tx: tx_b });
        let k = self.indices.len();
        self.gamma = self.gamma.clone().resize(k, k, crate::C64::new(0.0, 0.0));
        Ok(())
    }

    /// Adds an atom at explicit angles, outside any dictionary.
    pub fn push_raw(&mut self, index: usize, base: AnglePair, bounds: CellBounds) {
        self.indices.push(index);
        self.base_angles.push(base);
        self.current_angles.push(base);
        self.bounds.push(bounds);
        let k = self.indices.len();
        self.gamma = self.gamma.clone().resize(k, k, crate::C64::new(0.0, 0.0));
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_ue(&self) -> usize {
        self.n_ue
    }

    /// Whether every current angle lies inside its cell.
    pub fn within_bounds(&self) -> bool {
        self.current_angles
            .iter()
            .zip(&self.base_angles)
            .zip(&self.bounds)
            .all(|((cur, base), b)| b.rx.contains(base.rx, cur.rx) && b.tx.contains(base.tx, cur.tx))
    }

    /// Uncompressed atoms at the current angles, one per column (`M·N × k`).
    pub fn atoms(&self) -> CMatrix {
        let mut a = CMatrix::zeros(self.n_bs * self.n_ue, self.len());
        for (l, p) in self.current_angles.iter().enumerate() {
            a.set_column(l, &atom(p.rx, p.tx, self.n_bs, self.n_ue));
        }
        a
    }

    /// Compressed atoms `Φ a_res(Θ_l)` at the current angles (`m × k`).
    pub fn compressed_atoms(&self, phi: &SensingOperator) -> CMatrix {
        compressed_atoms(&self.current_angles, phi)
    }

    /// `Σ_{l,q} Γ_{l,q} a_res(Θ_l) a_res(Θ_q)ᴴ` at the current angles.
    ///
    /// Formed as `B Bᴴ` with `B = A Γ^{1/2}`. Nearly dependent atoms can give `Γ` huge
    /// eigenvalues that cancel in `A Γ Aᴴ`; the Gram form stays PSD through that.
    /// `Γ` is PSD by construction, so clipping negative eigenvalues only drops rounding.
    pub fn channel_covariance(&self) -> CMatrix {
        let (values, vectors) = crate::linalg::hermitian_eigen_desc(&self.gamma);
        let mut b = self.atoms() * vectors;
        for (mut col, &lambda) in b.column_iter_mut().zip(&values) {
            col *= crate::C64::new(lambda.max(0.0).sqrt(), 0.0);
        }
        crate::linalg::hermitian_part(&(&b * b.adjoint()))
    }
}

pub(crate) fn compressed_atoms(angles: &[AnglePair], phi: &SensingOperator) -> CMatrix {
    let mut v = CMatrix::zeros(phi.measurements(), angles.len());
    for (l, p) in angles.iter().enumerate() {
        v.set_column(l, &phi.compressed_atom(p.rx, p.tx));
    }
    v
}

/// Output of [`ppcomp`] or [`comp`].
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Hermitian `M·N × M·N` channel covariance.
    pub r_h_hat: CMatrix,
    pub support: SupportState,
    /// `‖R_y⊥‖²_F` after each greedy step.
    pub residual_history: Vec<f64>,
    /// Accepted perturbation iterations per greedy step (all zero for COMP).
    pub solver_iterations: Vec<usize>,
    /// Some `Γ` fit used a rank-deficient pseudo-inverse.
    pub rank_deficient: bool,
    /// Some atom was frozen at its grid point after collapsing onto another.
    pub degenerate_atoms: bool,
}

impl CovarianceEstimate {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen_desc;
    use crate::C64;

    #[test]
    fn covariance_stays_psd_with_dependent_atoms() {
        // Three atoms sharing an AoD over a two-element UE array are linearly dependent,
        // so Γ can carry a huge component along A's null space.
        let mut s = SupportState::empty(4, 2);
        let wide = PerturbationBounds { lower: 0.1, upper: 0.1 };
        for (i, rx) in [0.0, 2.678, 1.784].into_iter().enumerate() {
            s.push_raw(i, AnglePair::new(rx, 0.42), CellBounds { rx: wide, tx: wide });
        }
        let a = s.atoms();
        let svd = a.clone().svd(false, true);
        let (i_min, _) = svd.singular_values.argmin();
        let w = svd.v_t.unwrap().row(i_min).adjoint();
        assert!((&a * &w).norm() < 1e-12);
        let base = CMatrix::from_diagonal(&crate::CVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.2, 0.0),
        ]));
        s.gamma = base + (&w * w.adjoint()).scale(1e12);
        let r = s.channel_covariance();
        let (vals, _) = hermitian_eigen_desc(&r);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-12 * r.norm(), "min eigenvalue {min}");
    }
}
