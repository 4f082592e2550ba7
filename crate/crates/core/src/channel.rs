//! Uniform linear arrays, clustered multipath channels and compressed snapshots.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::grid::SensingOperator;
use crate::{CMatrix, CVector, Error, Result, C64};
#[allow(unused_imports)] // float math under no_std
use nalgebra::ComplexField;

/// Which end of the link an array sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayRole {
    /// Base station (transmit side, `M` antennas).
    Bs,
    /// User equipment (receive side, `N` antennas).
    Ue,
}

/// Half-wavelength uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    n_antennas: usize,
    role: ArrayRole,
}

impl ArrayGeometry {
    pub fn new(n_antennas: usize, role: ArrayRole) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::InvalidParameter("array needs at least one antenna"));
        }
        Ok(Self { n_antennas, role })
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn role(&self) -> ArrayRole {
        self.role
    }

    pub fn response(&self, theta: f64) -> CVector {
        steering_vector(theta, self.n_antennas)
    }
}

/// Array response `[a(θ)]_m = e^{jπ m cos θ} / √n` for `m = 0..n`.
pub fn steering_vector(theta: f64, n: usize) -> CVector {
    let scale = 1.0 / (n as f64).sqrt();
    let phase = PI * theta.cos();
    CVector::from_fn(n, |m, _| C64::from_polar(scale, phase * m as f64))
}

/// Elementwise `∂a/∂θ = −jπ m sin θ · [a(θ)]_m`.
pub fn steering_derivative(theta: f64, n: usize) -> CVector {
    let a = steering_vector(theta, n);
    let s = PI * theta.sin();
    CVector::from_fn(n, |m, _| a[m] * C64::new(0.0, -s * m as f64))
}

/// Elementwise `∂a/∂(cos θ) = jπ m · [a(θ)]_m`, nonzero at endfire unlike the angle derivative.
pub fn steering_cos_derivative(theta: f64, n: usize) -> CVector {
    let a = steering_vector(theta, n);
    CVector::from_fn(n, |m, _| a[m] * C64::new(0.0, PI * m as f64))
}

/// Draws `CN(0, variance)`: real and imaginary parts are each `N(0, variance/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(sd * re, sd * im)
}

/// Angles of the `K·L` multipath components.
///
/// `aoa[p]` and `aod[p]` belong to path `p = k·L + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcSet {
    pub n_clusters: usize,
    pub paths_per_cluster: usize,
    pub aoa: Vec<f64>,
    pub aod: Vec<f64>,
    pub beta: f64,
}

impl MpcSet {
    /// Builds a set from explicit angles with `β = √(K·L)`.
    pub fn new(
        n_clusters: usize,
        paths_per_cluster: usize,
        aoa: Vec<f64>,
        aod: Vec<f64>,
    ) -> Result<Self> {
        if n_clusters == 0 || paths_per_cluster == 0 {
            return Err(Error::InvalidParameter("cluster and path counts must be positive"));
        }
        let n_paths = n_clusters * paths_per_cluster;
        for (what, list) in [("AoA list", &aoa), ("AoD list", &aod)] {
            if list.len() != n_paths {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n_paths,
                    found: list.len(),
                });
            }
        }
        if aoa.iter().chain(aod.iter()).any(|&t| !(0.0..PI).contains(&t)) {
            return Err(Error::InvalidParameter("path angles must lie in [0, pi)"));
        }
        Ok(Self {
            n_clusters,
            paths_per_cluster,
            aoa,
            aod,
            beta: (n_paths as f64).sqrt(),
        })
    }

    pub fn n_paths(&self) -> usize {
        self.aoa.len()
    }
}

/// Draws `K·L` AoA/AoD pairs i.i.d. uniform on `[0, π)`.
pub fn draw_mpcs<R: Rng + ?Sized>(
    n_clusters: usize,
    paths_per_cluster: usize,
    rng: &mut R,
) -> Result<MpcSet> {
    if n_clusters == 0 || paths_per_cluster == 0 {
        return Err(Error::InvalidParameter("cluster and path counts must be positive"));
    }
    let n = n_clusters * paths_per_cluster;
    let mut aoa = Vec::with_capacity(n);
    let mut aod = Vec::with_capacity(n);
    for _ in 0..n {
        aoa.push(uniform_angle(rng));
        aod.push(uniform_angle(rng));
    }
    MpcSet::new(n_clusters, paths_per_cluster, aoa, aod)
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // random::<f64>() is in [0, 1); the product can round up to π for the largest draws.
    let theta = rng.random::<f64>() * PI;
    if theta < PI {
        theta
    } else {
        PI - f64::EPSILON * 4.0
    }
}

/// Ground-truth channel over `T` snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub mpcs: MpcSet,
    /// `K·L × T` path gains.
    pub gains: CMatrix,
    /// `N × M` channel matrix per snapshot.
    pub channel_matrices: Vec<CMatrix>,
    n_bs: usize,
    n_ue: usize,
}

impl ChannelRealization {
    /// Evaluates `H_t = (1/β) Σ_p α_{p,t} a_UE(θ_p^rx) a_BS(θ_p^tx)ᴴ` for every column of `gains`.
    pub fn from_gains(mpcs: MpcSet, gains: CMatrix, n_bs: usize, n_ue: usize) -> Result<Self> {
        if n_bs == 0 || n_ue == 0 {
            return Err(Error::InvalidParameter("arrays need at least one antenna"));
        }
        if gains.nrows() != mpcs.n_paths() {
            return Err(Error::DimensionMismatch {
                what: "gain matrix rows",
                expected: mpcs.n_paths(),
                found: gains.nrows(),
            });
        }
        if gains.ncols() == 0 {
            return Err(Error::InvalidParameter("at least one snapshot is required"));
        }
        let outer: Vec<CMatrix> = mpcs
            .aoa
            .iter()
            .zip(&mpcs.aod)
            .map(|(&rx, &tx)| steering_vector(rx, n_ue) * steering_vector(tx, n_bs).adjoint())
            .collect();
        let inv_beta = 1.0 / mpcs.beta;
        let channel_matrices = (0..gains.ncols())
            .map(|t| {
                let mut h = CMatrix::zeros(n_ue, n_bs);
                for (p, o) in outer.iter().enumerate() {
                    h += o * gains[(p, t)];
                }
                h.scale(inv_beta)
            })
            .collect();
        Ok(Self {
            mpcs,
            gains,
            channel_matrices,
            n_bs,
            n_ue,
        })
    }

    pub fn snapshots(&self) -> usize {
        self.channel_matrices.len()
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    pub fn n_ue(&self) -> usize {
        self.n_ue
    }

    /// `vec(H_t)`, columns stacked.
    pub fn vectorized(&self, t: usize) -> CVector {
        let h = &self.channel_matrices[t];
        CVector::from_column_slice(h.as_slice())
    }
}

/// Draws i.i.d. `CN(0, 1)` gains for `T` snapshots and builds the channel matrices.
pub fn realize_channel<R: Rng + ?Sized>(
    mpcs: &MpcSet,
    snapshots: usize,
    n_bs: usize,
    n_ue: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if snapshots == 0 {
        return Err(Error::InvalidParameter("at least one snapshot is required"));
    }
    let n = mpcs.n_paths();
    let mut gains = CMatrix::zeros(n, snapshots);
    for t in 0..snapshots {
        for p in 0..n {
            gains[(p, t)] = complex_gaussian(rng, 1.0);
        }
    }
    ChannelRealization::from_gains(mpcs.clone(), gains, n_bs, n_ue)
}

/// Compressed measurements `y_t` plus the per-dimension noise variance used.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub measurements: Vec<CVector>,
    pub noise_variance: f64,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    /// Mean of `‖y_t‖²` over snapshots.
    pub fn mean_power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.measurements.iter().map(|y| y.norm_squared()).sum::<f64>() / self.len() as f64
    }
}

/// `Φ vec(H_t)` for every snapshot, without noise.
pub fn noiseless_measurements(
    chan: &ChannelRealization,
    phi: &SensingOperator,
) -> Result<Vec<CVector>> {
    let cols = phi.phi.ncols();
    if cols != chan.n_bs * chan.n_ue || phi.n_bs() != chan.n_bs || phi.n_ue() != chan.n_ue {
        return Err(Error::DimensionMismatch {
            what: "sensing operator columns",
            expected: chan.n_bs * chan.n_ue,
            found: cols,
        });
    }
    Ok((0..chan.snapshots())
        .map(|t| &phi.phi * chan.vectorized(t))
        .collect())
}

/// `y_t = Φ vec(H_t) + (I_{M_RF} ⊗ Wᴴ) n_t` with `n_t ~ CN(0, σ² I)` of length `M_RF·N`.
pub fn generate_snapshots<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    phi: &SensingOperator,
    sigma2: f64,
    rng: &mut R,
) -> Result<SnapshotSet> {
    if sigma2.is_nan() || sigma2 < 0.0 {
        return Err(Error::InvalidParameter("noise variance must be non-negative"));
    }
    let mut measurements = noiseless_measurements(chan, phi)?;
    if sigma2 > 0.0 {
        let n_ue = phi.n_ue();
        let m_rf = phi.bs_chains();
        let w_h = phi.combiner.adjoint();
        for y in measurements.iter_mut() {
            let noise = CMatrix::from_fn(n_ue, m_rf, |_, _| complex_gaussian(rng, sigma2));
            let combined = &w_h * noise;
            *y += CVector::from_column_slice(combined.as_slice());
        }
    }
    Ok(SnapshotSet {
        measurements,
        noise_variance: sigma2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_sensing;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn steering_at_broadside_is_flat() {
        let a = steering_vector(PI / 2.0, 4);
        for z in a.iter() {
            assert!(close(*z, C64::new(0.5, 0.0)));
        }
    }

    #[test]
    fn steering_at_endfire_alternates() {
        let a = steering_vector(0.0, 2);
        let s = 1.0 / 2f64.sqrt();
        assert!(close(a[0], C64::new(s, 0.0)));
        assert!(close(a[1], C64::new(-s, 0.0)));
    }

    #[test]
    fn steering_at_sixty_degrees() {
        let a = steering_vector(PI / 3.0, 3);
        let s = 1.0 / 3f64.sqrt();
        assert!(close(a[0], C64::new(s, 0.0)));
        assert!(close(a[1], C64::new(0.0, s)));
        assert!(close(a[2], C64::new(-s, 0.0)));
    }

    #[test]
    fn derivative_examples() {
        assert!(steering_derivative(0.0, 8).iter().all(|z| z.norm() == 0.0));
        let d = steering_derivative(PI / 2.0, 2);
        let s = 1.0 / 2f64.sqrt();
        assert!(close(d[0], C64::new(0.0, 0.0)));
        assert!(close(d[1], C64::new(0.0, -PI * s)));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let theta = rng.random::<f64>() * PI;
            let n = rng.random_range(1..=16);
            let fd = (steering_vector(theta + h, n) - steering_vector(theta - h, n)).unscale(2.0 * h);
            let d = steering_derivative(theta, n);
            let denom = d.norm().max(1e-3);
            worst = worst.max((fd - d).norm() / denom);
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn cos_derivative_is_chain_rule_and_survives_endfire() {
        for &theta in &[0.4, 1.3, 2.9] {
            let via_angle = steering_derivative(theta, 6).unscale(-theta.sin());
            assert!((via_angle - steering_cos_derivative(theta, 6)).norm() < 1e-12);
        }
        let d = steering_cos_derivative(0.0, 2);
        assert!(close(d[1], C64::new(0.0, -PI / 2f64.sqrt())));
    }

    #[test]
    fn draw_mpcs_is_deterministic_and_in_range() {
        let a = draw_mpcs(2, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = draw_mpcs(2, 2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_paths(), 4);
        assert!(a.aoa.iter().chain(&a.aod).all(|&t| (0.0..PI).contains(&t)));
        assert!((a.beta - 2.0).abs() < 1e-15);
        let single = draw_mpcs(1, 1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(single.beta, 1.0);
        assert!(draw_mpcs(0, 1, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
    }

    #[test]
    fn single_unit_path_is_rank_one_with_unit_norm() {
        let mpcs = MpcSet::new(1, 1, vec![0.7], vec![1.9]).unwrap();
        let gains = CMatrix::from_element(1, 3, C64::new(1.0, 0.0));
        let chan = ChannelRealization::from_gains(mpcs, gains, 6, 4).unwrap();
        for h in &chan.channel_matrices {
            assert!((h.norm() - 1.0).abs() < 1e-12);
            let sv = h.clone().singular_values();
            assert!(sv[1] < 1e-12);
        }
    }

    #[test]
    fn zero_gains_give_zero_channels() {
        let mpcs = draw_mpcs(2, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let chan = ChannelRealization::from_gains(mpcs, CMatrix::zeros(4, 5), 4, 4).unwrap();
        assert!(chan.channel_matrices.iter().all(|h| h.norm() == 0.0));
    }

    #[test]
    fn gain_variance_is_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mpcs = draw_mpcs(2, 2, &mut rng).unwrap();
        let chan = realize_channel(&mpcs, 100, 16, 8, &mut rng).unwrap();
        assert_eq!(chan.gains.shape(), (4, 100));
        let n = 400.0;
        let mean_power = chan.gains.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        // |α|² ~ Exp(1): standard error of the mean is 1/√n.
        assert!((mean_power - 1.0).abs() < 3.0 / n.sqrt(), "{mean_power}");
    }

    #[test]
    fn noiseless_snapshots_equal_phi_times_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mpcs = draw_mpcs(1, 2, &mut rng).unwrap();
        let chan = realize_channel(&mpcs, 7, 4, 3, &mut rng).unwrap();
        let phi = build_sensing(4, 2, 3, 2, &mut rng).unwrap();
        let snaps = generate_snapshots(&chan, &phi, 0.0, &mut rng).unwrap();
        assert_eq!(snaps.len(), 7);
        for (t, y) in snaps.measurements.iter().enumerate() {
            assert_eq!(y.len(), 4);
            assert_eq!(*y, &phi.phi * chan.vectorized(t));
        }
    }

    #[test]
    fn snapshot_dimension_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mpcs = draw_mpcs(1, 1, &mut rng).unwrap();
        let chan = realize_channel(&mpcs, 2, 4, 3, &mut rng).unwrap();
        let phi = build_sensing(5, 2, 3, 2, &mut rng).unwrap();
        assert!(matches!(
            generate_snapshots(&chan, &phi, 0.0, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pure_noise_has_combined_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mpcs = MpcSet::new(1, 1, vec![1.0], vec![2.0]).unwrap();
        let draws = 20_000;
        let chan = ChannelRealization::from_gains(mpcs, CMatrix::zeros(1, draws), 4, 4).unwrap();
        let phi = build_sensing(4, 2, 4, 2, &mut rng).unwrap();
        let sigma2 = 0.7;
        let snaps = generate_snapshots(&chan, &phi, sigma2, &mut rng).unwrap();
        let m = phi.measurements();
        let mut emp = CMatrix::zeros(m, m);
        for y in &snaps.measurements {
            emp += y * y.adjoint();
        }
        emp.unscale_mut(draws as f64);
        let expected = phi.noise_covariance(sigma2);
        // Entries have magnitude ≲ σ²; the Monte-Carlo error is ~σ²/√draws per entry.
        let err = crate::linalg::max_modulus(&(emp - &expected));
        assert!(err < 6.0 * sigma2 / (draws as f64).sqrt(), "{err}");
    }

    #[test]
    fn snapshots_are_linear_in_gains() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mpcs = draw_mpcs(2, 1, &mut rng).unwrap();
        let chan = realize_channel(&mpcs, 4, 4, 2, &mut rng).unwrap();
        let doubled = ChannelRealization::from_gains(mpcs.clone(), chan.gains.scale(2.0), 4, 2).unwrap();
        let phi = build_sensing(4, 2, 2, 2, &mut rng).unwrap();
        let y1 = generate_snapshots(&chan, &phi, 0.0, &mut rng).unwrap();
        let y2 = generate_snapshots(&doubled, &phi, 0.0, &mut rng).unwrap();
        for (a, b) in y1.measurements.iter().zip(&y2.measurements) {
            assert!((a.scale(2.0) - b).norm() < 1e-13);
        }
    }
}
