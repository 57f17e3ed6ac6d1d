//! Accelerated proximal gradient for the strongly convex subproblems that
//! the built-in families solve "exactly" when no closed form exists.

use crate::error::{Error, Result};
use crate::linalg::Vector;

pub(crate) struct InnerSolve {
    pub x: Vector,
}

/// Minimizes `q + φ` where `∇q` is `lipschitz`-Lipschitz and `q` is
/// `mu`-strongly convex, using `prox(t, ·) = prox_t^φ`.
///
/// Stops when the fixed-point residual `‖x − prox_L(x − ∇q(x)/L)‖` drops to
/// `tol · max(1, ‖x‖)`; failing that within `max_iter` iterations is an
/// oracle-contract error, since callers promise exact solutions.
pub(crate) fn accelerated_prox_gradient(
    grad: impl Fn(&Vector) -> Vector,
    prox: impl Fn(f64, &Vector) -> Vector,
    lipschitz: f64,
    mu: f64,
    start: Vector,
    tol: f64,
    max_iter: usize,
) -> Result<InnerSolve> {
    let lip = lipschitz.max(f64::MIN_POSITIVE);
    let forward_backward = |v: &Vector| {
        let g = grad(v);
        prox(lip, &(v - g / lip))
    };
    let momentum_const = if mu > 0.0 {
        let (sl, sm) = (lip.sqrt(), mu.min(lip).sqrt());
        Some((sl - sm) / (sl + sm))
    } else {
        None
    };

    let mut x = start.clone();
    let mut prev = start;
    let mut best = f64::INFINITY;
    for k in 0..max_iter {
        let beta = momentum_const.unwrap_or(k as f64 / (k as f64 + 3.0));
        let extrapolated = &x + (&x - &prev) * beta;
        let next = forward_backward(&extrapolated);
        prev = std::mem::replace(&mut x, next);

        let residual = (forward_backward(&x) - &x).norm();
        best = best.min(residual);
        if residual <= tol * x.norm().max(1.0) {
            return Ok(InnerSolve { x });
        }
    }
    Err(Error::OracleContract(format!(
        "inner subproblem solver did not certify stationarity within {max_iter} iterations (best residual {:e})",
        best
    )))
}
