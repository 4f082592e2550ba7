//! Cosine-uniform angular grids, the virtual dictionary `Ψ = A_BS^C ⊗ A_UE`, hybrid
//! sensing operators and per-cell perturbation bounds.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::channel::{steering_cos_derivative, steering_derivative, steering_vector};
use crate::linalg::kron_vec;
use crate::{CMatrix, CVector, Error, Result, C64};
#[allow(unused_imports)] // float math under no_std
use nalgebra::ComplexField;

/// Grid of `G` angles with `cos θ_i = 1 − 2i/G`, `i = 0..G`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularGrid {
    cosines: Vec<f64>,
    angles: Vec<f64>,
}

/// Builds the size-`g` cosine-uniform grid.
pub fn build_grid(g: usize) -> Result<AngularGrid> {
    if g < 2 {
        return Err(Error::GridTooSmall(g));
    }
    let cosines: Vec<f64> = (0..g).map(|i| 1.0 - 2.0 * i as f64 / g as f64).collect();
    let angles = cosines.iter().map(|c| c.acos()).collect();
    Ok(AngularGrid { cosines, angles })
}

impl AngularGrid {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// The exact cosine values `1 − 2i/G`.
    pub fn cosines(&self) -> &[f64] {
        &self.cosines
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angles[i]
    }

    /// Half-distances to the neighbouring grid angles.
    ///
    /// The first point has no lower neighbour (`lower = 0`); the last one extends
    /// half-way to `π`.
    pub fn perturbation_bounds(&self, i: usize) -> Result<PerturbationBounds> {
        let g = self.len();
        if i >= g {
            return Err(Error::IndexOutOfRange { index: i, size: g });
        }
        let here = self.angles[i];
        let lower = if i == 0 {
            0.0
        } else {
            (here - self.angles[i - 1]) / 2.0
        };
        let upper = if i + 1 == g {
            (PI - here) / 2.0
        } else {
            (self.angles[i + 1] - here) / 2.0
        };
        Ok(PerturbationBounds { lower, upper })
    }

    /// Grid index whose cell `[θ̄ − Δ_LB, θ̄ + Δ_UB)` contains `theta`.
    ///
    /// Midpoints belong to the upper cell; angles past the last cell give `None`.
    pub fn locate(&self, theta: f64) -> Option<usize> {
        if theta.is_nan() || theta < 0.0 {
            return None;
        }
        (0..self.len()).find(|&i| {
            let b = self.perturbation_bounds(i).expect("index in range");
            let (lo, hi) = b.interval(self.angles[i]);
            theta >= lo && theta < hi
        })
    }
}

/// Distances a perturbed angle may move below (`lower`) and above (`upper`) its grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBounds {
    pub lower: f64,
    pub upper: f64,
}

impl PerturbationBounds {
    /// `[center − lower, center + upper]`.
    pub fn interval(&self, center: f64) -> (f64, f64) {
        (center - self.lower, center + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.lower + self.upper
    }

    pub fn clamp(&self, center: f64, theta: f64) -> f64 {
        let (lo, hi) = self.interval(center);
        theta.max(lo).min(hi)
    }

    pub fn contains(&self, center: f64, theta: f64) -> bool {
        let (lo, hi) = self.interval(center);
        theta >= lo && theta <= hi
    }
}

/// `vec(a_UE(θ_rx) a_BS(θ_tx)ᴴ) = conj(a_BS(θ_tx)) ⊗ a_UE(θ_rx)`, length `M·N`.
pub fn atom(theta_rx: f64, theta_tx: f64, n_bs: usize, n_ue: usize) -> CVector {
    kron_vec(&steering_vector(theta_tx, n_bs).conjugate(), &steering_vector(theta_rx, n_ue))
}

/// `∂ atom / ∂θ_rx`.
pub fn atom_derivative_rx(theta_rx: f64, theta_tx: f64, n_bs: usize, n_ue: usize) -> CVector {
    kron_vec(&steering_vector(theta_tx, n_bs).conjugate(), &steering_derivative(theta_rx, n_ue))
}

/// `∂ atom / ∂θ_tx`.
pub fn atom_derivative_tx(theta_rx: f64, theta_tx: f64, n_bs: usize, n_ue: usize) -> CVector {
    kron_vec(&steering_derivative(theta_tx, n_bs).conjugate(), &steering_vector(theta_rx, n_ue))
}

/// Steering vectors for every grid angle, one per column.
pub fn steering_matrix(grid: &AngularGrid, n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, grid.len());
    for (i, &theta) in grid.angles().iter().enumerate() {
        a.set_column(i, &steering_vector(theta, n));
    }
    a
}

/// The virtual channel dictionary over an AoA grid (`G_UE`) and an AoD grid (`G_BS`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub grid_rx: AngularGrid,
    pub grid_tx: AngularGrid,
    /// `M·N × G_UE·G_BS`, column `i_tx·G_UE + i_rx`.
    pub atoms: CMatrix,
    n_bs: usize,
    n_ue: usize,
}

/// Assembles `Ψ` column by column with [`atom`].
pub fn build_dictionary(
    grid_rx: AngularGrid,
    grid_tx: AngularGrid,
    n_bs: usize,
    n_ue: usize,
) -> Result<Dictionary> {
    if grid_rx.len() < 2 {
        return Err(Error::GridTooSmall(grid_rx.len()));
    }
    if grid_tx.len() < 2 {
        return Err(Error::GridTooSmall(grid_tx.len()));
    }
    if n_bs == 0 || n_ue == 0 {
        return Err(Error::InvalidParameter("arrays need at least one antenna"));
    }
    let g_rx = grid_rx.len();
    let mut atoms = CMatrix::zeros(n_bs * n_ue, g_rx * grid_tx.len());
    for (i_tx, &tx) in grid_tx.angles().iter().enumerate() {
        for (i_rx, &rx) in grid_rx.angles().iter().enumerate() {
            atoms.set_column(i_tx * g_rx + i_rx, &atom(rx, tx, n_bs, n_ue));
        }
    }
    Ok(Dictionary {
        grid_rx,
        grid_tx,
        atoms,
        n_bs,
        n_ue,
    })
}

impl Dictionary {
    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_ue(&self) -> usize {
        self.n_ue
    }

    pub fn len(&self) -> usize {
        self.grid_rx.len() * self.grid_tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column_index(&self, i_rx: usize, i_tx: usize) -> usize {
        i_tx * self.grid_rx.len() + i_rx
    }

    /// Inverse of [`Dictionary::column_index`]: `(i_rx, i_tx)`.
    pub fn grid_indices(&self, j: usize) -> (usize, usize) {
        let g = self.grid_rx.len();
        (j % g, j / g)
    }

    /// Grid angles `(θ̄_rx, θ̄_tx)` of column `j`.
    pub fn base_angles(&self, j: usize) -> (f64, f64) {
        let (i_rx, i_tx) = self.grid_indices(j);
        (self.grid_rx.angle(i_rx), self.grid_tx.angle(i_tx))
    }

    /// Perturbation bounds `(rx, tx)` of column `j`.
    pub fn bounds(&self, j: usize) -> Result<(PerturbationBounds, PerturbationBounds)> {
        if j >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                size: self.len(),
            });
        }
        let (i_rx, i_tx) = self.grid_indices(j);
        Ok((
            self.grid_rx.perturbation_bounds(i_rx)?,
            self.grid_tx.perturbation_bounds(i_tx)?,
        ))
    }

    /// `A_UE` (`N × G_UE`).
    pub fn ue_steering(&self) -> CMatrix {
        steering_matrix(&self.grid_rx, self.n_ue)
    }

    /// `A_BS` (`M × G_BS`).
    pub fn bs_steering(&self) -> CMatrix {
        steering_matrix(&self.grid_tx, self.n_bs)
    }
}

/// Analog precoder bank `F` (`M × M_RF`), combiner bank `W` (`N × N_RF`) and
/// `Φ = Fᵀ ⊗ Wᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingOperator {
    pub precoder: CMatrix,
    pub combiner: CMatrix,
    pub phi: CMatrix,
}

/// Random unit-modulus phase banks with i.i.d. uniform phases.
pub fn build_sensing<R: Rng + ?Sized>(
    n_bs: usize,
    bs_chains: usize,
    n_ue: usize,
    ue_chains: usize,
    rng: &mut R,
) -> Result<SensingOperator> {
    check_chains(n_bs, bs_chains)?;
    check_chains(n_ue, ue_chains)?;
    let f_mod = 1.0 / (n_bs as f64).sqrt();
    let w_mod = 1.0 / (n_ue as f64).sqrt();
    let mut precoder = CMatrix::zeros(n_bs, bs_chains);
    for z in precoder.iter_mut() {
        *z = C64::from_polar(f_mod, 2.0 * PI * rng.random::<f64>());
    }
    let mut combiner = CMatrix::zeros(n_ue, ue_chains);
    for z in combiner.iter_mut() {
        *z = C64::from_polar(w_mod, 2.0 * PI * rng.random::<f64>());
    }
    SensingOperator::from_banks(precoder, combiner)
}

fn check_chains(antennas: usize, chains: usize) -> Result<()> {
    if antennas == 0 || chains == 0 {
        return Err(Error::InvalidParameter("antenna and RF chain counts must be positive"));
    }
    if chains > antennas {
        return Err(Error::TooManyRfChains { chains, antennas });
    }
    Ok(())
}

impl SensingOperator {
    /// Validates the phase-only constraint and forms `Φ`.
    pub fn from_banks(precoder: CMatrix, combiner: CMatrix) -> Result<Self> {
        check_chains(precoder.nrows(), precoder.ncols())?;
        check_chains(combiner.nrows(), combiner.ncols())?;
        for (bank, n) in [(&precoder, precoder.nrows()), (&combiner, combiner.nrows())] {
            let expected = 1.0 / (n as f64).sqrt();
            if let Some(bad) = bank.iter().find(|z| (z.norm() - expected).abs() > 1e-12) {
                return Err(Error::NotPhaseOnly {
                    expected,
                    found: bad.norm(),
                });
            }
        }
        let phi = precoder.transpose().kronecker(&combiner.adjoint());
        Ok(Self {
            precoder,
            combiner,
            phi,
        })
    }

    pub fn n_bs(&self) -> usize {
        self.precoder.nrows()
    }

    pub fn n_ue(&self) -> usize {
        self.combiner.nrows()
    }

    pub fn bs_chains(&self) -> usize {
        self.precoder.ncols()
    }

    pub fn ue_chains(&self) -> usize {
        self.combiner.ncols()
    }

    /// Number of measurements `m = M_RF·N_RF`.
    pub fn measurements(&self) -> usize {
        self.bs_chains() * self.ue_chains()
    }

    /// Numerical rank of `Φ` (`rank F · rank W`).
    pub fn rank(&self) -> usize {
        numerical_rank(&self.precoder) * numerical_rank(&self.combiner)
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.measurements().min(self.phi.ncols())
    }

    /// `Φ · atom(θ_rx, θ_tx) = (Fᵀ conj a_BS(θ_tx)) ⊗ (Wᴴ a_UE(θ_rx))`.
    pub fn compressed_atom(&self, theta_rx: f64, theta_tx: f64) -> CVector {
        kron_vec(
            &self.bs_compress(&steering_vector(theta_tx, self.n_bs()).conjugate()),
            &self.ue_compress(&steering_vector(theta_rx, self.n_ue())),
        )
    }

    /// `Φ · ∂atom/∂θ_rx`.
    pub fn compressed_derivative_rx(&self, theta_rx: f64, theta_tx: f64) -> CVector {
        kron_vec(
            &self.bs_compress(&steering_vector(theta_tx, self.n_bs()).conjugate()),
            &self.ue_compress(&steering_derivative(theta_rx, self.n_ue())),
        )
    }

    /// `Φ · ∂atom/∂θ_tx`.
    pub fn compressed_derivative_tx(&self, theta_rx: f64, theta_tx: f64) -> CVector {
        kron_vec(
            &self.bs_compress(&steering_derivative(theta_tx, self.n_bs()).conjugate()),
            &self.ue_compress(&steering_vector(theta_rx, self.n_ue())),
        )
    }

    /// `Φ · ∂atom/∂(cos θ_rx)`.
    pub fn compressed_cos_derivative_rx(&self, theta_rx: f64, theta_tx: f64) -> CVector {
        kron_vec(
            &self.bs_compress(&steering_vector(theta_tx, self.n_bs()).conjugate()),
            &self.ue_compress(&steering_cos_derivative(theta_rx, self.n_ue())),
        )
    }

    /// `Φ · ∂atom/∂(cos θ_tx)`.
    pub fn compressed_cos_derivative_tx(&self, theta_rx: f64, theta_tx: f64) -> CVector {
        kron_vec(
            &self.bs_compress(&steering_cos_derivative(theta_tx, self.n_bs()).conjugate()),
            &self.ue_compress(&steering_vector(theta_rx, self.n_ue())),
        )
    }

    fn bs_compress(&self, conj_a_bs: &CVector) -> CVector {
        self.precoder.tr_mul(conj_a_bs)
    }

    fn ue_compress(&self, a_ue: &CVector) -> CVector {
        self.combiner.ad_mul(a_ue)
    }

    /// Covariance `σ² (I_{M_RF} ⊗ WᴴW)` of the combined noise.
    pub fn noise_covariance(&self, sigma2: f64) -> CMatrix {
        let gram = self.combiner.ad_mul(&self.combiner);
        CMatrix::identity(self.bs_chains(), self.bs_chains())
            .kronecker(&gram)
            .scale(sigma2)
    }

    /// `E‖ñ_t‖² = σ² · M_RF · ‖W‖_F²`.
    pub fn combined_noise_power(&self, sigma2: f64) -> f64 {
        sigma2 * self.bs_chains() as f64 * self.combiner.norm_squared()
    }
}

fn numerical_rank(a: &CMatrix) -> usize {
    let sv = a.clone().singular_values();
    let s_max = sv.iter().cloned().fold(0.0, f64::max);
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * s_max;
    sv.iter().filter(|&&s| s > tol).count()
}

/// The compressed dictionary `ΦΨ` (`m × G_UE·G_BS`).
///
/// Built from the Kronecker structure `(Fᵀ A_BS^C) ⊗ (Wᴴ A_UE)` rather than a dense product.
pub fn composed_dictionary(dict: &Dictionary, phi: &SensingOperator) -> Result<CMatrix> {
    if dict.n_bs() != phi.n_bs() || dict.n_ue() != phi.n_ue() {
        return Err(Error::DimensionMismatch {
            what: "dictionary rows vs sensing operator columns",
            expected: phi.phi.ncols(),
            found: dict.atoms.nrows(),
        });
    }
    let bs = phi.precoder.tr_mul(&dict.bs_steering().conjugate());
    let ue = phi.combiner.ad_mul(&dict.ue_steering());
    Ok(bs.kronecker(&ue))
}
