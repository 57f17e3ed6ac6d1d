//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Extreme eigenvalues `(min, max)` of a symmetric matrix via a dense eigensolve.
pub fn symmetric_extreme_eigenvalues(m: &Matrix) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Largest eigenvalue of `AᵀA`, i.e. the squared spectral norm of `A`.
pub fn gram_spectral_norm(a: &Matrix) -> f64 {
    // the smaller Gram matrix has the same nonzero spectrum
    let gram = if a.nrows() <= a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    symmetric_extreme_eigenvalues(&gram).1.max(0.0)
}

/// Solves `M u = rhs` for symmetric positive definite `M`.
pub fn solve_spd(m: &Matrix, rhs: &Vector) -> Result<Vector> {
    m.clone()
        .cholesky()
        .map(|c| c.solve(rhs))
        .ok_or_else(|| Error::InvalidArgument("system matrix is not positive definite".into()))
}

pub fn concat(x: &Vector, y: &Vector) -> Vector {
    Vector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|e| e.is_finite())
}
