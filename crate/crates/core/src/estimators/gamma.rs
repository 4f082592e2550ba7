use super::GammaMode;
use crate::linalg::{hermitian_part, pseudo_inverse};
use crate::{CMatrix, Error, Result, C64};

/// Fitted path-gain correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFit {
    /// Hermitian `k × k`.
    pub gamma: CMatrix,
    /// The pseudo-inverse had to drop directions (collinear or zero atoms).
    pub rank_deficient: bool,
}

/// Least-squares weights `Γ` for `R_y ≈ V Γ Vᴴ`, with `V = [Φa_1 … Φa_k]`.
pub fn gamma_ls(r_y: &CMatrix, compressed: &CMatrix, mode: GammaMode) -> Result<GammaFit> {
    let (m, k) = compressed.shape();
    if k == 0 {
        return Err(Error::InvalidParameter("gamma fit needs at least one atom"));
    }
    if r_y.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            what: "measurement covariance size",
            expected: m,
            found: r_y.nrows(),
        });
    }
    match mode {
        GammaMode::Joint => {
            let (pinv, rank_deficient) = pseudo_inverse(compressed);
            let gamma = &pinv * r_y * pinv.adjoint();
            Ok(GammaFit {
                gamma: hermitian_part(&gamma),
                rank_deficient,
            })
        }
        GammaMode::PerPair => {
            let norms: alloc::vec::Vec<f64> =
                compressed.column_iter().map(|c| c.norm_squared()).collect();
            let rank_deficient = norms.contains(&0.0);
            let rv = r_y * compressed;
            let mut gamma = CMatrix::zeros(k, k);
            for l in 0..k {
                for q in l..k {
                    let denom = norms[l] * norms[q];
                    let g = if denom > 0.0 {
                        compressed.column(l).dotc(&rv.column(q)) / denom
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    gamma[(l, q)] = g;
                    gamma[(q, l)] = g.conj();
                }
                gamma[(l, l)].im = 0.0;
            }
            Ok(GammaFit {
                gamma,
                rank_deficient,
            })
        }
    }
}
