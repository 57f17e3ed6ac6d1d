//! Power iteration for `‖A‖²`, used when a dense eigensolve is too costly or
//! to sanity-check a user-supplied bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    /// Rayleigh quotient `‖Av‖²` at the final unit vector; never exceeds `‖A‖²`.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates the largest eigenvalue of `AᵀA`, stopping once the relative
/// change of the Rayleigh quotient is at most `tol`.
pub fn estimate_spectral_norm(a: &Matrix, tol: f64, max_iter: usize, seed: u64) -> Result<SpectralEstimate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidArgument("matrix must be nonempty".into()));
    }
    if a.iter().all(|v| *v == 0.0) {
        return Ok(SpectralEstimate { value: 0.0, iterations: 0, converged: true });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vector::from_fn(a.ncols(), |_, _| StandardNormal.sample(&mut rng));
    v /= v.norm();
    let mut value = (a * &v).norm_squared();
    for it in 1..=max_iter {
        let w = a.tr_mul(&(a * &v));
        let n = w.norm();
        if n == 0.0 {
            // start landed in the null space; restart along a coordinate
            v = Vector::from_fn(a.ncols(), |i, _| if i == it % a.ncols() { 1.0 } else { 0.0 });
            continue;
        }
        v = w / n;
        let next = (a * &v).norm_squared();
        let change = (next - value).abs();
        value = next;
        if change <= tol * value {
            return Ok(SpectralEstimate { value, iterations: it, converged: true });
        }
    }
    Ok(SpectralEstimate { value, iterations: max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gram_spectral_norm;

    #[test]
    fn diagonal_matrix() {
        let a = Matrix::from_diagonal(&Vector::from_column_slice(&[3.0, 1.0, 0.5]));
        let est = estimate_spectral_norm(&a, 1e-15, 10_000, 0).unwrap();
        assert!(est.converged);
        assert!((est.value - 9.0).abs() < 1e-9);
    }

    #[test]
    fn matches_dense_eigensolve() {
        let a = Matrix::from_fn(7, 5, |i, j| ((i * 5 + j) as f64 * 0.37).sin());
        let exact = gram_spectral_norm(&a);
        let est = estimate_spectral_norm(&a, 1e-14, 100_000, 3).unwrap();
        assert!(est.value <= exact * (1.0 + 1e-12));
        assert!((est.value - exact).abs() <= 1e-8 * exact);
    }

    #[test]
    fn zero_matrix_and_bad_tolerance() {
        assert_eq!(estimate_spectral_norm(&Matrix::zeros(2, 2), 1e-8, 10, 0).unwrap().value, 0.0);
        assert!(estimate_spectral_norm(&Matrix::identity(2, 2), 0.0, 10, 0).is_err());
    }
}
