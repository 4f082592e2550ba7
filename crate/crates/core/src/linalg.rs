//! Small dense helpers shared by the estimators and metrics.

use alloc::vec::Vec;

use nalgebra::ComplexField;

use crate::{CMatrix, CVector};
#[cfg(test)]
use crate::C64;

/// `‖X − Xᴴ‖_F / max(1, ‖X‖_F)`.
pub fn hermitian_asymmetry(x: &CMatrix) -> f64 {
    if !x.is_square() {
        return f64::INFINITY;
    }
    let diff = x - x.adjoint();
    diff.norm() / x.norm().max(1.0)
}

/// `(X + Xᴴ) / 2`.
pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()).scale(0.5)
}

/// Squared Frobenius norm.
pub fn frobenius_sq(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Kronecker product of two column vectors, `a ⊗ b`.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, ai) in a.iter().enumerate() {
        let block = i * b.len();
        for (k, bk) in b.iter().enumerate() {
            out[block + k] = ai * bk;
        }
    }
    out
}

/// Moore–Penrose pseudo-inverse computed from the SVD.
///
/// Singular values below `max(rows, cols) · ε · σ_max` are treated as zero; the
/// flag is set when that truncation happened (rank deficiency).
pub fn pseudo_inverse(a: &CMatrix) -> (CMatrix, bool) {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return (CMatrix::zeros(cols, rows), true);
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = rows.max(cols) as f64 * f64::EPSILON * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut pinv = CMatrix::zeros(cols, rows);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let v_col = v_t.row(i).adjoint();
            let u_row = u.column(i).adjoint();
            pinv += (v_col * u_row).unscale(s);
        }
    }
    (pinv, rank < rows.min(cols) || rank == 0)
}

/// Eigen-decomposition of a Hermitian matrix, ordered by decreasing `|λ|`.
///
/// For a Hermitian matrix the singular values are `|λ|` and the singular vectors are
/// the eigenvectors, so this doubles as an ordered SVD. The sort is stable, so exact
/// ties keep the order the decomposition produced.
pub fn hermitian_eigen_desc(x: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = hermitian_part(x);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .partial_cmp(&eig.eigenvalues[a].abs())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(x.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Largest modulus of any entry; zero for an empty matrix.
pub fn max_modulus(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.modulus()).fold(0.0, f64::max)
}

/// `Re(aᴴ b)`.
pub fn re_inner(a: &CVector, b: &CVector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}
