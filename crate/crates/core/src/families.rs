//! Seeded instances shared by the tests, the benches and the CLI.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::apps::composite::{build_composite_auxiliary, CompositeInstance};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::problem::{BlockVector, Optimum, SeparableProblem};
use crate::prox::{prox_scaled_l1, ConvexSet, Projector, Regularizer};
use crate::solvers::{run_am, SolveConfig};

/// `f = ½x²`, `g = ½(y − 1)²`, `H = ½(x − y)²`, with `z* = (1/3, 2/3)` and `Ψ* = 1/6`.
pub fn scalar_instance() -> CompositeInstance {
    CompositeInstance::new(
        Matrix::identity(1, 1),
        1.0,
        Regularizer::Quadratic { weight: 1.0, center: Vector::zeros(1) },
        Regularizer::Quadratic { weight: 1.0, center: Vector::from_element(1, 1.0) },
    )
    .expect("scalar instance is valid")
}

pub fn scalar_problem() -> SeparableProblem {
    let mut p = build_composite_auxiliary(&scalar_instance()).expect("scalar instance is valid");
    p.name = "scalar".into();
    p
}

/// Gaussian matrix with entries `N(0, 1/rows)`.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let scale = 1.0 / (rows as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        v * scale
    })
}

/// `f = λ‖·‖₁`, `g = ½‖· − b‖²` and a Gaussian `A` of the given shape.
pub fn seeded_composite_instance(rows: usize, cols: usize, rho: f64, lambda: f64, seed: u64) -> Result<CompositeInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(rows, cols, &mut rng);
    let b = Vector::from_fn(rows, |_, _| StandardNormal.sample(&mut rng));
    CompositeInstance::new(a, rho, Regularizer::L1 { lambda }, Regularizer::Quadratic { weight: 1.0, center: b })
}

/// The 15×20 instance with `ρ = 1` and `f = 0.1‖·‖₁`.
pub fn default_composite_instance(seed: u64) -> CompositeInstance {
    seeded_composite_instance(15, 20, 1.0, 0.1, seed).expect("default composite instance is valid")
}

/// `‖x‖₁ + δ(y ≥ 0) + ½‖x − Qy − b‖²` with a random orthogonal `Q`.
///
/// Neither `f`, `g` nor `H` is strongly convex. All block moduli are 1 and
/// `L₅ = 2`; both block minimizers are closed form.
pub fn sparse_nonneg_problem(n: usize, seed: u64) -> Result<SeparableProblem> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Matrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let q = Arc::new(raw.qr().q());
    let b: Arc<Vector> = Arc::new(Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)));
    let nonneg = ConvexSet::LowerBound(0.0);

    let (q1, b1) = (q.clone(), b.clone());
    let (q2, b2) = (q.clone(), b.clone());
    let (q3, b3) = (q.clone(), b.clone());
    let set = nonneg.clone();
    let set2 = nonneg.clone();
    let mut p = SeparableProblem::new(
        format!("sparse-nonneg-{n}"),
        n,
        n,
        Arc::new(|x: &Vector| x.lp_norm(1)),
        Arc::new(move |y: &Vector| set.indicator(y)),
        Arc::new(move |x: &Vector, y: &Vector| 0.5 * (x - &*q1 * y - &*b1).norm_squared()),
        Arc::new(move |x: &Vector, y: &Vector| x - &*q2 * y - &*b2),
        Arc::new(move |x: &Vector, y: &Vector| -q3.tr_mul(&(x - &*q3 * y - &*b3))),
        Arc::new(|t: f64, x: &Vector| prox_scaled_l1(t, 1.0, x)),
        Arc::new(move |_t: f64, y: &Vector| set2.project(y)),
    )?;

    let (q4, b4) = (q.clone(), b.clone());
    let (q5, b5) = (q.clone(), b.clone());
    let (q6, b6) = (q.clone(), b.clone());
    let (q7, b7) = (q.clone(), b.clone());
    p = p
        .with_exact_argmin_x(Arc::new(move |y: &Vector| Ok(prox_scaled_l1(1.0, 1.0, &(&*q4 * y + &*b4)))))
        .with_exact_argmin_y(Arc::new(move |x: &Vector| Ok(q5.tr_mul(&(x - &*b5)).map(|v| v.max(0.0)))))
        .with_regularized_argmin_x(Arc::new(move |y: &Vector, c: f64, anchor: &Vector| {
            let target = (&*q6 * y + &*b6 + anchor * c) / (1.0 + c);
            Ok(prox_scaled_l1(1.0 + c, 1.0, &target))
        }))
        .with_regularized_argmin_y(Arc::new(move |x: &Vector, d: f64, anchor: &Vector| {
            let target = (q7.tr_mul(&(x - &*b7)) + anchor * d) / (1.0 + d);
            Ok(target.map(|v| v.max(0.0)))
        }))
        .with_constant_lipschitz(1.0, 1.0, 1.0, 1.0, 2.0);
    Ok(p)
}

/// Attaches `(z*, Ψ*)` from a long AM run started at `z0`.
pub fn with_reference_optimum(problem: SeparableProblem, z0: &BlockVector, iterations: usize) -> Result<SeparableProblem> {
    let config = SolveConfig::default().with_max_iterations(iterations);
    let trace = run_am(&problem, z0, &config)?;
    let (k_best, psi_star) = trace
        .psi_values()
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("trace is nonempty");
    let z_star = trace.iterate(k_best).clone();
    Ok(problem.with_optimum(Optimum { z_star, psi_star, curvature: None }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::check_gradient;

    #[test]
    fn scalar_optimum() {
        let p = scalar_problem();
        let opt = p.require_optimum().unwrap();
        assert!((opt.psi_star - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn composite_is_reproducible() {
        let a = default_composite_instance(7);
        let b = default_composite_instance(7);
        assert_eq!(a.a, b.a);
        assert_eq!((a.n(), a.m()), (20, 15));
    }

    #[test]
    fn sparse_nonneg_oracles() {
        let p = sparse_nonneg_problem(4, 1).unwrap();
        let z = BlockVector::new(Vector::from_element(4, 0.3), Vector::from_element(4, 0.7));
        assert!(check_gradient(&p, &z, 1e-5).unwrap().max() <= 1e-7);
        // exact y-step is optimal: projected gradient fixed point
        let x = Vector::from_column_slice(&[1.0, -2.0, 0.5, 0.0]);
        let y = (p.exact_argmin_y.as_ref().unwrap())(&x).unwrap();
        let g = (p.grad_y_h)(&x, &y);
        let fixed = (&y - g).map(|v| v.max(0.0));
        assert!((fixed - &y).norm() < 1e-14);
    }

    #[test]
    fn reference_optimum_is_a_lower_value() {
        let p = sparse_nonneg_problem(4, 2).unwrap();
        let z0 = BlockVector::zeros(4, 4);
        let p = with_reference_optimum(p, &z0, 2000).unwrap();
        let opt = p.require_optimum().unwrap();
        assert!(opt.psi_star <= p.psi(&z0).unwrap());
    }
}
