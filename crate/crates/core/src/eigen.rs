//! Hermitian eigendecomposition helpers on complex dense matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Full Hermitian eigendecomposition, eigenvalues ascending with the
/// eigenvector columns permuted to match.
pub fn hermitian_eigen(q: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let se = q.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(q: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = q.clone().symmetric_eigenvalues().iter().cloned().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}
