//! Thin wrappers over nalgebra for the dense Hermitian work the crate needs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(min, max)` eigenvalue of a Hermitian matrix.
pub fn extremal_eigenvalues(m: &CMatrix) -> (f64, f64) {
    let ev = hermitian_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(lo), Some(hi)) => (*lo, *hi),
        _ => (f64::NAN, f64::NAN),
    }
}

/// Spectral condition number of a PSD Hermitian matrix; infinite when the
/// smallest eigenvalue is not positive.
pub fn condition_number(min: f64, max: f64) -> f64 {
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Largest `|G_ij - G_ji^*|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest `|G_ij - delta_ij|`.
pub fn identity_deviation(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for ((i, j), v) in m.iter().enumerate().map(|(idx, v)| ((idx % m.nrows(), idx / m.nrows()), v)) {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((v - Complex64::new(target, 0.0)).norm());
    }
    worst
}

/// Solves `G c = b` for Hermitian positive definite `G`, falling back to LU
/// when Cholesky breaks down.
pub fn solve_hermitian(g: &CMatrix, b: &CVector) -> Option<CVector> {
    if let Some(ch) = g.clone().cholesky() {
        return Some(ch.solve(b));
    }
    g.clone().lu().solve(b)
}

/// `x^* G y`.
pub fn quadratic_form(g: &CMatrix, x: &CVector, y: &CVector) -> Complex64 {
    x.dotc(&(g * y))
}

/// Principal submatrix on the given (sorted or unsorted) index list.
pub fn principal_submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}
