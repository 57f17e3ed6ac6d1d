//! Numerical validators for the problem-oracle contract: finite-difference
//! gradient checks, empirical Lipschitz slopes and sampled convexity tests.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::{BlockVector, SeparableProblem};

/// Worst componentwise relative error between the gradient oracles and
/// central differences of `H`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientReport {
    pub max_rel_error_x: f64,
    pub max_rel_error_y: f64,
}

impl GradientReport {
    pub fn max(&self) -> f64 {
        self.max_rel_error_x.max(self.max_rel_error_y)
    }
}

/// Compares `∇ₓH`, `∇_yH` against central finite differences with the given step.
///
/// The relative error of a component is `|fd − g| / max(1, |g|)`.
pub fn check_gradient(problem: &SeparableProblem, z: &BlockVector, step: f64) -> Result<GradientReport> {
    problem.check_dims(z)?;
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("difference step must be positive, got {step}")));
    }
    let gx = (problem.grad_x_h)(&z.x, &z.y);
    let gy = (problem.grad_y_h)(&z.x, &z.y);
    let h = &problem.h_value;

    let mut err_x: f64 = 0.0;
    for i in 0..problem.n1 {
        let mut xp = z.x.clone();
        let mut xm = z.x.clone();
        xp[i] += step;
        xm[i] -= step;
        let (hp, hm) = (h(&xp, &z.y), h(&xm, &z.y));
        if !hp.is_finite() || !hm.is_finite() {
            return Err(Error::NonFinite { block: 'x', index: i });
        }
        let fd = (hp - hm) / (2.0 * step);
        err_x = err_x.max((fd - gx[i]).abs() / gx[i].abs().max(1.0));
    }
    let mut err_y: f64 = 0.0;
    for j in 0..problem.n2 {
        let mut yp = z.y.clone();
        let mut ym = z.y.clone();
        yp[j] += step;
        ym[j] -= step;
        let (hp, hm) = (h(&z.x, &yp), h(&z.x, &ym));
        if !hp.is_finite() || !hm.is_finite() {
            return Err(Error::NonFinite { block: 'y', index: j });
        }
        let fd = (hp - hm) / (2.0 * step);
        err_y = err_y.max((fd - gy[j]).abs() / gy[j].abs().max(1.0));
    }
    Ok(GradientReport { max_rel_error_x: err_x, max_rel_error_y: err_y })
}

/// Largest secant slope `‖∇(u) − ∇(v)‖ / ‖u − v‖` over consecutive pairs of
/// sampled points. This is a lower bound for the true modulus, meant to be
/// compared against a declared Lipschitz oracle.
pub fn sample_lipschitz(
    gradient: impl Fn(&Vector) -> Vector,
    mut sampler: impl FnMut() -> Vector,
    num_samples: usize,
) -> Result<f64> {
    if num_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {num_samples}")));
    }
    let mut prev = sampler();
    let mut prev_grad = gradient(&prev);
    let mut best: Option<f64> = None;
    for _ in 1..num_samples {
        let cur = sampler();
        let cur_grad = gradient(&cur);
        let dist = (&cur - &prev).norm();
        if dist > 0.0 {
            let slope = (&cur_grad - &prev_grad).norm() / dist;
            best = Some(best.map_or(slope, |b| b.max(slope)));
        }
        prev = cur;
        prev_grad = cur_grad;
    }
    best.ok_or_else(|| Error::DegenerateSample("sampler produced only coincident points".into()))
}

/// Largest violation of the secant inequality
/// `φ(λu + (1−λ)v) ≤ λφ(u) + (1−λ)φ(v)` over sampled triples. Triples with an
/// infinite endpoint value are skipped (the inequality holds trivially).
pub fn secant_convexity_violation(
    value: impl Fn(&Vector) -> f64,
    mut sampler: impl FnMut() -> (Vector, Vector, f64),
    num_samples: usize,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..num_samples {
        let (u, v, lambda) = sampler();
        let (fu, fv) = (value(&u), value(&v));
        if !fu.is_finite() || !fv.is_finite() {
            continue;
        }
        let mid = &u * lambda + &v * (1.0 - lambda);
        let deficit = value(&mid) - (lambda * fu + (1.0 - lambda) * fv);
        worst = worst.max(deficit);
    }
    worst
}

/// Largest violation of `H(z₂) ≥ H(z₁) + ⟨∇H(z₁), z₂ − z₁⟩` over sampled pairs.
pub fn first_order_convexity_violation(
    problem: &SeparableProblem,
    mut sampler: impl FnMut() -> (BlockVector, BlockVector),
    num_samples: usize,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..num_samples {
        let (z1, z2) = sampler();
        let h1 = (problem.h_value)(&z1.x, &z1.y);
        let h2 = (problem.h_value)(&z2.x, &z2.y);
        let gx = (problem.grad_x_h)(&z1.x, &z1.y);
        let gy = (problem.grad_y_h)(&z1.x, &z1.y);
        let lin = h1 + gx.dot(&(&z2.x - &z1.x)) + gy.dot(&(&z2.y - &z1.y));
        worst = worst.max(lin - h2);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn coupling_problem(
        n1: usize,
        n2: usize,
        h: impl Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
        gx: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
        gy: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    ) -> SeparableProblem {
        SeparableProblem::new(
            "test",
            n1,
            n2,
            Arc::new(|_: &Vector| 0.0),
            Arc::new(|_: &Vector| 0.0),
            Arc::new(h),
            Arc::new(gx),
            Arc::new(gy),
            Arc::new(|_t, p: &Vector| p.clone()),
            Arc::new(|_t, p: &Vector| p.clone()),
        )
        .unwrap()
    }

    #[test]
    fn gradient_of_squared_difference() {
        let p = coupling_problem(
            1,
            1,
            |x, y| 0.5 * (x[0] - y[0]).powi(2),
            |x, y| x - y,
            |x, y| y - x,
        );
        let r = check_gradient(&p, &BlockVector::from_slices(&[2.0], &[1.0]), 1e-5).unwrap();
        assert!(r.max() <= 1e-6, "{r:?}");
    }

    #[test]
    fn zero_coupling_has_zero_error() {
        let p = coupling_problem(
            2,
            3,
            |_, _| 0.0,
            |x, _| Vector::zeros(x.len()),
            |_, y| Vector::zeros(y.len()),
        );
        let r = check_gradient(&p, &BlockVector::from_slices(&[0.3, -2.0], &[1.0, 5.0, 7.0]), 1e-5).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn gradient_of_linear_least_squares() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let (a1, a2, a3) = (a.clone(), a.clone(), a.clone());
        let p = coupling_problem(
            2,
            2,
            move |x, y| 0.5 * (&a1 * x - y).norm_squared(),
            move |x, y| a2.transpose() * (&a2 * x - y),
            move |x, y| -(&a3 * x - y),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let z = BlockVector::from_slices(
                &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            );
            assert!(check_gradient(&p, &z, 1e-5).unwrap().max() <= 1e-6);
        }
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let p = coupling_problem(1, 1, |x, y| 0.5 * (x[0] - y[0]).powi(2), |x, _| x.clone(), |x, y| y - x);
        let r = check_gradient(&p, &BlockVector::from_slices(&[2.0], &[1.0]), 1e-5).unwrap();
        assert!(r.max_rel_error_x > 0.1);
    }

    #[test]
    fn non_finite_coupling_names_coordinate() {
        let p = coupling_problem(
            1,
            2,
            |_, y| if y[1] > 1.0 { f64::INFINITY } else { 0.0 },
            |x, _| Vector::zeros(x.len()),
            |_, y| Vector::zeros(y.len()),
        );
        let e = check_gradient(&p, &BlockVector::from_slices(&[0.0], &[0.0, 1.0]), 1e-5).unwrap_err();
        assert_eq!(e, Error::NonFinite { block: 'y', index: 1 });
    }

    #[test]
    fn slope_of_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_lipschitz(|u| u * 3.0, || Vector::from_element(1, rng.random_range(0.0..1.0)), 100).unwrap();
        assert!((2.999..=3.0 + 1e-12).contains(&s), "{s}");
    }

    #[test]
    fn slope_of_constant_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = sample_lipschitz(
            |_| Vector::from_element(2, 4.0),
            || Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)),
            50,
        )
        .unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn slope_of_diagonal_quadratic_approaches_nine() {
        // ∇(½‖Ax‖²) = AᵀA x with AᵀA = diag(9, 1)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_lipschitz(
            |u| Vector::from_column_slice(&[9.0 * u[0], u[1]]),
            || Vector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)),
            2000,
        )
        .unwrap();
        assert!(s <= 9.0 + 1e-12 && s > 8.9, "{s}");
    }

    #[test]
    fn coincident_samples_are_degenerate() {
        let e = sample_lipschitz(|u| u.clone(), || Vector::from_element(1, 0.5), 10).unwrap_err();
        assert!(matches!(e, Error::DegenerateSample(_)));
        assert!(sample_lipschitz(|u| u.clone(), || Vector::zeros(1), 1).is_err());
    }

    #[test]
    fn secant_test_flags_concave_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut sampler = || {
            (
                Vector::from_element(1, rng.random_range(-2.0..2.0)),
                Vector::from_element(1, rng.random_range(-2.0..2.0)),
                rng.random_range(0.01..0.99),
            )
        };
        assert!(secant_convexity_violation(|u| u.norm_squared(), &mut sampler, 200) <= 1e-12);
        assert!(secant_convexity_violation(|u| -u.norm_squared(), &mut sampler, 200) > 0.0);
    }
}
