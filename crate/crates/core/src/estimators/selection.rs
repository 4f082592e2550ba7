use nalgebra::ComplexField;

use crate::{CMatrix, Error, Result};

/// Index of the non-excluded column `d_j` of `composed` maximizing `|d_jᴴ R d_j|`.
///
/// Ties go to the lowest index.
pub fn project_select(r_res: &CMatrix, composed: &CMatrix, excluded: &[usize]) -> Result<usize> {
    let m = composed.nrows();
    if r_res.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            what: "residual covariance size",
            expected: m,
            found: r_res.nrows(),
        });
    }
    let rd = r_res * composed;
    let mut best: Option<(usize, f64)> = None;
    for j in 0..composed.ncols() {
        if excluded.contains(&j) {
            continue;
        }
        let score = composed.column(j).dotc(&rd.column(j)).modulus();
        match best {
            Some((_, s)) if score <= s => {}
            _ => best = Some((j, score)),
        }
    }
    best.map(|(j, _)| j).ok_or(Error::AllColumnsExcluded)
}
