//! Ground-truth channel covariances and estimate quality metrics.

use crate::channel::ChannelRealization;
use crate::grid::atom;
use crate::linalg::{frobenius_sq, hermitian_eigen_desc, hermitian_part};
use crate::{CMatrix, Error, Result};

/// Roundoff slack allowed on either side of `[0, 1]` before clipping.
const ETA_SLACK: f64 = 1e-10;

/// How the reference covariance is formed from a channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceSource {
    /// `(1/T) Σ_t vec(H_t) vec(H_t)ᴴ` over the realized snapshots.
    #[default]
    Sample,
    /// `(1/β²) Σ_p a_res,p a_res,pᴴ`, the expectation over unit-power gains.
    Ensemble,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthCovariance {
    pub r_h: CMatrix,
    pub source: CovarianceSource,
}

/// Reference covariance of a channel realization.
pub fn true_covariance(chan: &ChannelRealization, source: CovarianceSource) -> GroundTruthCovariance {
    let r_h = match source {
        CovarianceSource::Sample => {
            let n = chan.n_bs() * chan.n_ue();
            let one = crate::C64::new(1.0, 0.0);
            let mut r = CMatrix::zeros(n, n);
            for t in 0..chan.snapshots() {
                let h = chan.vectorized(t);
                r.gerc(one, &h, &h, one);
            }
            hermitian_part(&r.unscale(chan.snapshots() as f64))
        }
        CovarianceSource::Ensemble => {
            let a = path_atoms(chan);
            hermitian_part(&(&a * a.adjoint())).unscale(chan.mpcs.beta * chan.mpcs.beta)
        }
    };
    GroundTruthCovariance { r_h, source }
}

/// The sample covariance through the path expansion
/// `(1/(β² T)) Σ_{l,q} Γ_{l,q} a_res,l a_res,qᴴ` with `Γ_{l,q} = Σ_t α_{l,t} α*_{q,t}`.
pub fn sample_covariance_by_expansion(chan: &ChannelRealization) -> CMatrix {
    let a = path_atoms(chan);
    let gamma = &chan.gains * chan.gains.adjoint();
    let scale = chan.mpcs.beta * chan.mpcs.beta * chan.snapshots() as f64;
    hermitian_part(&(&a * gamma * a.adjoint()).unscale(scale))
}

fn path_atoms(chan: &ChannelRealization) -> CMatrix {
    let mpcs = &chan.mpcs;
    let mut a = CMatrix::zeros(chan.n_bs() * chan.n_ue(), mpcs.n_paths());
    for (p, (&rx, &tx)) in mpcs.aoa.iter().zip(&mpcs.aod).enumerate() {
        a.set_column(p, &atom(rx, tx, chan.n_bs(), chan.n_ue()));
    }
    a
}

/// `η = tr(Ûᴴ R Û) / tr(Uᴴ R U)` where `Û` and `U` hold the top-`rank` singular vectors of
/// the estimate and of the reference `R`.
pub fn relative_efficiency(r_hat: &CMatrix, r_true: &CMatrix, rank: usize) -> Result<f64> {
    let dim = r_true.nrows();
    if !r_true.is_square() || r_hat.shape() != r_true.shape() {
        return Err(Error::DimensionMismatch {
            what: "covariance sizes",
            expected: dim,
            found: r_hat.nrows(),
        });
    }
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { rank, dim });
    }
    if frobenius_sq(r_true) == 0.0 {
        return Err(Error::ZeroReference);
    }
    let (true_values, _) = hermitian_eigen_desc(r_true);
    let best: f64 = true_values.iter().take(rank).sum();
    let (_, u_hat) = hermitian_eigen_desc(r_hat);
    let u_hat = u_hat.columns(0, rank);
    let captured = (u_hat.adjoint() * r_true * u_hat).trace().re;
    let eta = captured / best;
    if eta > 1.0 && eta <= 1.0 + ETA_SLACK {
        Ok(1.0)
    } else if (-ETA_SLACK..0.0).contains(&eta) {
        Ok(0.0)
    } else {
        Ok(eta)
    }
}

/// `‖R̂ − R‖²_F / ‖R‖²_F`.
pub fn nmse(r_hat: &CMatrix, r_true: &CMatrix) -> Result<f64> {
    if r_hat.shape() != r_true.shape() {
        return Err(Error::DimensionMismatch {
            what: "covariance sizes",
            expected: r_true.nrows(),
            found: r_hat.nrows(),
        });
    }
    let reference = frobenius_sq(r_true);
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(frobenius_sq(&(r_hat - r_true)) / reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_mpcs, realize_channel, MpcSet};
    use crate::{CVector, C64};
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))))
    }

    #[test]
    fn single_unit_path_is_rank_one() {
        let mpcs = MpcSet::new(1, 1, vec![0.4], vec![1.7]).unwrap();
        let chan = ChannelRealization::from_gains(mpcs, CMatrix::from_element(1, 6, C64::new(1.0, 0.0)), 4, 2).unwrap();
        let a = atom(0.4, 1.7, 4, 2);
        let r = true_covariance(&chan, CovarianceSource::Sample).r_h;
        assert!((r - &a * a.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn sample_and_expansion_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let mpcs = draw_mpcs(2, 2, &mut rng).unwrap();
            let chan = realize_channel(&mpcs, 9, 6, 4, &mut rng).unwrap();
            let direct = true_covariance(&chan, CovarianceSource::Sample).r_h;
            let expanded = sample_covariance_by_expansion(&chan);
            assert!((direct - expanded).norm() < 1e-10);
        }
    }

    #[test]
    fn ensemble_trace_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mpcs = draw_mpcs(2, 2, &mut rng).unwrap();
        assert_eq!(mpcs.beta, 2.0);
        let chan = realize_channel(&mpcs, 3, 8, 4, &mut rng).unwrap();
        let r = true_covariance(&chan, CovarianceSource::Ensemble).r_h;
        assert!((r.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_examples() {
        let r = diag(&[3.0, 1.0]);
        assert_eq!(relative_efficiency(&r, &r, 1).unwrap(), 1.0);
        let eta = relative_efficiency(&diag(&[1.0, 3.0]), &r, 1).unwrap();
        assert!((eta - 1.0 / 3.0).abs() < 1e-15);
        let u = diag(&[1.0, 0.0]);
        let v = diag(&[0.0, 1.0]);
        assert_eq!(relative_efficiency(&v, &u, 1).unwrap(), 0.0);
        assert_eq!(relative_efficiency(&r, &CMatrix::zeros(2, 2), 1), Err(Error::ZeroReference));
        assert!(matches!(relative_efficiency(&r, &r, 3), Err(Error::InvalidRank { .. })));
    }

    #[test]
    fn nmse_examples() {
        let r = diag(&[3.0, 1.0]);
        assert_eq!(nmse(&r, &r).unwrap(), 0.0);
        assert_eq!(nmse(&CMatrix::zeros(2, 2), &r).unwrap(), 1.0);
        assert_eq!(nmse(&r.scale(2.0), &r).unwrap(), 1.0);
        assert_eq!(nmse(&r, &CMatrix::zeros(2, 2)), Err(Error::ZeroReference));
    }
}
