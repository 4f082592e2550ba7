use crate::channel::SnapshotSet;
use crate::linalg::hermitian_part;
use crate::{CMatrix, Error, Result, C64};

/// `R_y = (1/T) Σ_t y_t y_tᴴ`.
pub fn sample_covariance(snaps: &SnapshotSet) -> Result<CMatrix> {
    let first = snaps.measurements.first().ok_or(Error::EmptySnapshots)?;
    let m = first.len();
    let one = C64::new(1.0, 0.0);
    let mut r = CMatrix::zeros(m, m);
    for y in &snaps.measurements {
        if y.len() != m {
            return Err(Error::DimensionMismatch {
                what: "snapshot length",
                expected: m,
                found: y.len(),
            });
        }
        r.gerc(one, y, y, one);
    }
    Ok(hermitian_part(&r.unscale(snaps.len() as f64)))
}
