use alloc::vec::Vec;

use super::{AnglePair, SupportState};
use crate::grid::SensingOperator;
use crate::linalg::{hermitian_part, re_inner};
use crate::{CMatrix, CVector, Error, Result};

/// `R_y⊥ = R_y − Φ (Σ_{l,q} Γ_{l,q} a_res(Θ_l) a_res(Θ_q)ᴴ) Φᴴ` at the support's current angles.
pub fn residual_covariance(
    r_y: &CMatrix,
    support: &SupportState,
    phi: &SensingOperator,
) -> Result<CMatrix> {
    check_support(r_y, support, phi)?;
    if support.is_empty() {
        return Ok(r_y.clone());
    }
    let v = support.compressed_atoms(phi);
    Ok(residual_from(r_y, &v, &support.gamma))
}

pub(crate) fn residual_from(r_y: &CMatrix, v: &CMatrix, gamma: &CMatrix) -> CMatrix {
    hermitian_part(&(r_y - v * gamma * v.adjoint()))
}

fn check_support(r_y: &CMatrix, support: &SupportState, phi: &SensingOperator) -> Result<()> {
    let m = phi.measurements();
    if r_y.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            what: "measurement covariance size",
            expected: m,
            found: r_y.nrows(),
        });
    }
    let k = support.len();
    if support.gamma.shape() != (k, k) {
        return Err(Error::DimensionMismatch {
            what: "gamma size",
            expected: k,
            found: support.gamma.nrows(),
        });
    }
    if support.n_bs() != phi.n_bs() || support.n_ue() != phi.n_ue() {
        return Err(Error::DimensionMismatch {
            what: "support array sizes vs sensing operator",
            expected: phi.n_bs() * phi.n_ue(),
            found: support.n_bs() * support.n_ue(),
        });
    }
    Ok(())
}

/// Negative half-gradients `(d_rx, d_tx)` of `‖R_y − Φ(Σ Γ_{l,q} a_l a_qᴴ)Φᴴ‖²_F`
/// with respect to each selected AoA and AoD, holding `Γ` fixed.
///
/// `r_res` must be the residual at the support's current angles and `Γ`. Stepping the
/// angles along positive multiples of the returned directions decreases the residual.
pub fn gradient_directions(
    support: &SupportState,
    r_res: &CMatrix,
    phi: &SensingOperator,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if support.is_empty() {
        return Err(Error::InvalidParameter("gradient needs a non-empty support"));
    }
    let m = phi.measurements();
    if r_res.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            what: "residual covariance size",
            expected: m,
            found: r_res.nrows(),
        });
    }
    let v = support.compressed_atoms(phi);
    Ok(directions(&support.current_angles, &v, &support.gamma, r_res, phi))
}

/// For atom `l`, with `v'` the compressed derivative, `g = V Γ_{:,l}` and `h = V Γ_{l,:}ᴴ`:
/// `d = Re(hᴴ R v') + Re(gᴴ R v')`. Both terms coincide when `Γ` is Hermitian.
pub(crate) fn directions(
    angles: &[AnglePair],
    v: &CMatrix,
    gamma: &CMatrix,
    r_res: &CMatrix,
    phi: &SensingOperator,
) -> (Vec<f64>, Vec<f64>) {
    directions_with(angles, v, gamma, r_res, |p| {
        (phi.compressed_derivative_rx(p.rx, p.tx), phi.compressed_derivative_tx(p.rx, p.tx))
    })
}

/// As [`directions`] but with respect to `cos θ_rx` and `cos θ_tx`.
pub(crate) fn cos_directions(
    angles: &[AnglePair],
    v: &CMatrix,
    gamma: &CMatrix,
    r_res: &CMatrix,
    phi: &SensingOperator,
) -> (Vec<f64>, Vec<f64>) {
    directions_with(angles, v, gamma, r_res, |p| {
        (phi.compressed_cos_derivative_rx(p.rx, p.tx), phi.compressed_cos_derivative_tx(p.rx, p.tx))
    })
}

fn directions_with(
    angles: &[AnglePair],
    v: &CMatrix,
    gamma: &CMatrix,
    r_res: &CMatrix,
    derivatives: impl Fn(&AnglePair) -> (CVector, CVector),
) -> (Vec<f64>, Vec<f64>) {
    let k = angles.len();
    let g_all = v * gamma;
    let h_all = v * gamma.adjoint();
    let mut d_rx = Vec::with_capacity(k);
    let mut d_tx = Vec::with_capacity(k);
    for (l, p) in angles.iter().enumerate() {
        let g: CVector = g_all.column(l).into_owned();
        let h: CVector = h_all.column(l).into_owned();
        let rg = r_res * &g;
        let rh = r_res * &h;
        let (dv_rx, dv_tx) = derivatives(p);
        d_rx.push(re_inner(&rh, &dv_rx) + re_inner(&rg, &dv_rx));
        d_tx.push(re_inner(&rh, &dv_tx) + re_inner(&rg, &dv_tx));
    }
    (d_rx, d_tx)
}
