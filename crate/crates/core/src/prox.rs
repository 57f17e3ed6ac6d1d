//! Proximal operators with the quadratic weighted by `t`:
//!
//! ```text
//! prox_t^σ(x) = argmin_u { σ(u) + (t/2)‖u − x‖² }
//! ```
//!
//! so a larger `t` means a smaller implicit step. The catalog is exposed both
//! as free functions and through [`Regularizer`], and every operator can be
//! validated against the variational characterization
//! `σ(u) ≥ σ(w) + t⟨x − w, u − w⟩` for `w = prox_t^σ(x)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// A convex function together with its proximal map.
pub trait ProxOperator: Send + Sync {
    fn prox(&self, t: f64, x: &Vector) -> Vector;

    /// `σ(u)`, `+∞` outside the domain.
    fn value(&self, u: &Vector) -> f64;

    /// A point of `dom σ`, used for property tests.
    fn sample_domain(&self, rng: &mut dyn RngCore, dim: usize) -> Vector {
        Vector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0))
    }
}

/// Euclidean projection onto a closed convex set.
pub trait Projector: Send + Sync {
    fn project(&self, x: &Vector) -> Vector;

    /// Membership test, when one is available.
    fn contains(&self, _x: &Vector) -> Option<bool> {
        None
    }
}

pub fn prox_zero(_t: f64, x: &Vector) -> Vector {
    x.clone()
}

/// Soft thresholding at `λ/t`.
pub fn prox_scaled_l1(t: f64, lambda: f64, x: &Vector) -> Vector {
    let threshold = lambda / t;
    x.map(|v| v.signum() * (v.abs() - threshold).max(0.0))
}

/// Prox of `σ(u) = (w/2)‖u − b‖²`: `(t·x + w·b) / (t + w)`.
pub fn prox_quadratic(t: f64, b: &Vector, w: f64, x: &Vector) -> Vector {
    (x * t + b * w) / (t + w)
}

/// Prox of the indicator of a closed convex set, which is the projection
/// for every `t > 0`. The result is rechecked for membership when the
/// projector offers a membership test.
pub fn project_set(projector: &dyn Projector, t: f64, x: &Vector) -> Result<Vector> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("prox parameter must be positive, got {t}")));
    }
    let p = projector.project(x);
    if projector.contains(&p) == Some(false) {
        return Err(Error::OracleContract("projector returned a point outside its set".into()));
    }
    Ok(p)
}

/// Closed convex sets with closed-form projections.
#[derive(Clone)]
pub enum ConvexSet {
    Whole,
    /// `[lower, ∞)` in every coordinate.
    LowerBound(f64),
    /// Axis-aligned box `lower ≤ u ≤ upper`.
    Box { lower: Vector, upper: Vector },
    /// Euclidean ball of the given radius centered at the origin.
    Ball { radius: f64 },
    /// A single point.
    Point(Vector),
    Custom(Arc<dyn Projector>),
}

impl fmt::Debug for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexSet::Whole => write!(f, "Whole"),
            ConvexSet::LowerBound(l) => write!(f, "LowerBound({l})"),
            ConvexSet::Box { lower, upper } => write!(f, "Box({:?}, {:?})", lower.as_slice(), upper.as_slice()),
            ConvexSet::Ball { radius } => write!(f, "Ball({radius})"),
            ConvexSet::Point(p) => write!(f, "Point({:?})", p.as_slice()),
            ConvexSet::Custom(_) => write!(f, "Custom"),
        }
    }
}

const MEMBERSHIP_TOL: f64 = 1e-12;

impl Projector for ConvexSet {
    fn project(&self, x: &Vector) -> Vector {
        match self {
            ConvexSet::Whole => x.clone(),
            ConvexSet::LowerBound(l) => x.map(|v| v.max(*l)),
            ConvexSet::Box { lower, upper } => {
                Vector::from_fn(x.len(), |i, _| x[i].max(lower[i]).min(upper[i]))
            }
            ConvexSet::Ball { radius } => {
                let n = x.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    x * (*radius / n)
                }
            }
            ConvexSet::Point(p) => p.clone(),
            ConvexSet::Custom(p) => p.project(x),
        }
    }

    fn contains(&self, x: &Vector) -> Option<bool> {
        let inside = match self {
            ConvexSet::Whole => true,
            ConvexSet::LowerBound(l) => x.iter().all(|v| *v >= *l - MEMBERSHIP_TOL * l.abs().max(1.0)),
            ConvexSet::Box { lower, upper } => x.iter().enumerate().all(|(i, v)| {
                *v >= lower[i] - MEMBERSHIP_TOL * lower[i].abs().max(1.0)
                    && *v <= upper[i] + MEMBERSHIP_TOL * upper[i].abs().max(1.0)
            }),
            ConvexSet::Ball { radius } => x.norm() <= radius * (1.0 + MEMBERSHIP_TOL),
            ConvexSet::Point(p) => (x - p).norm() <= MEMBERSHIP_TOL * p.norm().max(1.0),
            ConvexSet::Custom(p) => return p.contains(x),
        };
        Some(inside)
    }
}

impl ConvexSet {
    /// `δ(u, Z)`; custom sets without a membership test are treated as
    /// containing every point they fix.
    pub fn indicator(&self, u: &Vector) -> f64 {
        let inside = match self.contains(u) {
            Some(b) => b,
            None => (self.project(u) - u).norm() <= MEMBERSHIP_TOL * u.norm().max(1.0),
        };
        if inside {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// The built-in catalog of nonsmooth terms.
#[derive(Clone, Debug)]
pub enum Regularizer {
    Zero,
    /// `λ‖u‖₁`.
    L1 { lambda: f64 },
    /// `(weight/2)‖u − center‖²`.
    Quadratic { weight: f64, center: Vector },
    /// `δ(u, Z)`.
    Indicator(ConvexSet),
}

impl ProxOperator for Regularizer {
    fn prox(&self, t: f64, x: &Vector) -> Vector {
        match self {
            Regularizer::Zero => prox_zero(t, x),
            Regularizer::L1 { lambda } => prox_scaled_l1(t, *lambda, x),
            Regularizer::Quadratic { weight, center } => prox_quadratic(t, center, *weight, x),
            Regularizer::Indicator(set) => set.project(x),
        }
    }

    fn value(&self, u: &Vector) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * u.lp_norm(1),
            Regularizer::Quadratic { weight, center } => 0.5 * weight * (u - center).norm_squared(),
            Regularizer::Indicator(set) => set.indicator(u),
        }
    }

    fn sample_domain(&self, rng: &mut dyn RngCore, dim: usize) -> Vector {
        let raw = Vector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0));
        match self {
            Regularizer::Indicator(ConvexSet::Point(p)) => p.clone(),
            Regularizer::Indicator(set) => set.project(&(raw * 2.0)),
            _ => raw,
        }
    }
}

/// Outcome of [`check_prox_characterization`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProxCheckReport {
    pub pass: bool,
    /// `max_u [σ(w) + t⟨x − w, u − w⟩ − σ(u)]`; negative means every probe
    /// satisfied the inequality with margin.
    pub worst_violation: f64,
    pub worst_probe: Option<Vector>,
}

/// Probes the variational inequality characterizing `w = prox_t^σ(x)`.
///
/// Half of the probes come from the operator's domain sampler and half from
/// a unit box around `w`; probes with `σ(u) = +∞` satisfy the inequality
/// trivially and are skipped.
pub fn check_prox_characterization(
    op: &dyn ProxOperator,
    t: f64,
    x: &Vector,
    num_probe: usize,
    seed: u64,
    tol: f64,
) -> Result<ProxCheckReport> {
    if !(t > 0.0) || num_probe == 0 {
        return Err(Error::InvalidArgument("need t > 0 and at least one probe".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = op.prox(t, x);
    let sigma_w = op.value(&w);
    if !sigma_w.is_finite() {
        return Ok(ProxCheckReport { pass: false, worst_violation: f64::INFINITY, worst_probe: None });
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_probe = None;
    for i in 0..num_probe {
        let u = if i % 2 == 0 {
            op.sample_domain(&mut rng, x.len())
        } else {
            Vector::from_fn(x.len(), |j, _| w[j] + rng.random_range(-1.0..1.0))
        };
        let sigma_u = op.value(&u);
        if !sigma_u.is_finite() {
            continue;
        }
        let deficit = sigma_w + t * (x - &w).dot(&(&u - &w)) - sigma_u;
        if deficit > worst {
            worst = deficit;
            worst_probe = Some(u);
        }
    }
    Ok(ProxCheckReport { pass: worst <= tol, worst_violation: worst, worst_probe })
}

/// Margin of the sufficient-decrease inequality for one composite step
/// `u⁺ = prox_t^σ(u − ∇h(u)/t)` with `t > L_h`:
///
/// returns `[h(u⁺) + σ(u⁺)] − [h(u) + σ(u) − ½(t − L_h)‖u⁺ − u‖²]`, which is
/// nonpositive whenever the inequality holds.
pub fn composite_step_descent(
    h: &dyn Fn(&Vector) -> f64,
    grad_h: &dyn Fn(&Vector) -> Vector,
    lip_h: f64,
    op: &dyn ProxOperator,
    t: f64,
    u: &Vector,
) -> Result<f64> {
    if !(t > lip_h) {
        return Err(Error::InvalidArgument(format!("need t > L_h, got t={t}, L_h={lip_h}")));
    }
    let g = grad_h(u);
    let next = op.prox(t, &(u - g / t));
    let lhs = h(&next) + op.value(&next);
    let rhs = h(u) + op.value(u) - 0.5 * (t - lip_h) * (&next - u).norm_squared();
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    /// Minimizes `σ(u) + (t/2)(u − x)²` on `[x − 5, x + 5]` with step 1e-4,
    /// then once more around the incumbent with a 100× finer grid.
    fn grid_prox_1d(sigma: impl Fn(f64) -> f64, t: f64, x: f64) -> f64 {
        let obj = |u: f64| sigma(u) + 0.5 * t * (u - x).powi(2);
        let scan = |lo: f64, hi: f64, step: f64| {
            let n = ((hi - lo) / step).round() as usize;
            (0..=n)
                .map(|i| lo + i as f64 * step)
                .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
                .unwrap()
        };
        let coarse = scan(x - 5.0, x + 5.0, 1e-4);
        scan(coarse - 1e-4, coarse + 1e-4, 1e-6)
    }

    #[test]
    fn zero_prox_is_identity() {
        assert_eq!(prox_zero(1.0, &v(&[2.0, -3.0])), v(&[2.0, -3.0]));
        assert_eq!(prox_zero(100.0, &v(&[0.0])), v(&[0.0]));
    }

    #[test]
    fn soft_thresholding_examples() {
        let out = prox_scaled_l1(1.0, 1.0, &v(&[2.0, -0.5]));
        assert_eq!(out, v(&[1.0, 0.0]));
        for (x, expected) in [(2.0, 1.0), (-0.5, 0.0)] {
            assert!((grid_prox_1d(|u| u.abs(), 1.0, x) - expected).abs() < 1e-4);
        }
        let out = prox_scaled_l1(2.0, 1.0, &v(&[0.6]));
        assert!((out[0] - 0.1).abs() < 1e-15);
        assert!((grid_prox_1d(|u| u.abs(), 2.0, 0.6) - 0.1).abs() < 1e-4);
        assert_eq!(prox_scaled_l1(3.0, 0.0, &v(&[-1.5, 4.0])), v(&[-1.5, 4.0]));
    }

    #[test]
    fn quadratic_prox_examples() {
        let out = prox_quadratic(5.0, &v(&[1.0]), 1.0, &v(&[0.0]));
        assert!((out[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((grid_prox_1d(|u| 0.5 * (u - 1.0).powi(2), 5.0, 0.0) - 1.0 / 6.0).abs() < 1e-4);
        assert_eq!(prox_quadratic(2.0, &v(&[7.0]), 0.0, &v(&[3.0])), v(&[3.0]));
        assert_eq!(prox_quadratic(1.0, &v(&[3.0, 4.0]), 1.0, &v(&[3.0, 4.0])), v(&[3.0, 4.0]));
    }

    #[test]
    fn projection_examples() {
        let half_line = ConvexSet::LowerBound(0.1);
        assert_eq!(project_set(&half_line, 1.0, &v(&[-1.0, 0.5])).unwrap(), v(&[0.1, 0.5]));
        assert_eq!(project_set(&half_line, 1.0, &v(&[0.2, 0.7])).unwrap(), v(&[0.2, 0.7]));
        let ball = ConvexSet::Ball { radius: 1.0 };
        let p = project_set(&ball, 1.0, &v(&[3.0, 4.0])).unwrap();
        assert!((p - v(&[0.6, 0.8])).norm() < 1e-15);
    }

    #[test]
    fn projection_is_independent_of_t() {
        let sets = [
            ConvexSet::LowerBound(0.0),
            ConvexSet::Ball { radius: 2.0 },
            ConvexSet::Box { lower: v(&[-1.0, 0.0]), upper: v(&[1.0, 0.5]) },
        ];
        let x = v(&[1.7, -2.3]);
        for set in &sets {
            let a = project_set(set, 0.1, &x).unwrap();
            for t in [1.0, 10.0] {
                assert_eq!(a, project_set(set, t, &x).unwrap());
            }
        }
    }

    struct Misbehaving;
    impl Projector for Misbehaving {
        fn project(&self, x: &Vector) -> Vector {
            x * 2.0
        }
        fn contains(&self, x: &Vector) -> Option<bool> {
            Some(x.norm() <= 1.0)
        }
    }

    #[test]
    fn membership_recheck_catches_bad_projector() {
        let e = project_set(&Misbehaving, 1.0, &v(&[3.0])).unwrap_err();
        assert!(matches!(e, Error::OracleContract(_)));
        assert!(project_set(&ConvexSet::Whole, 0.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn characterization_passes_for_catalog() {
        let ops = [
            Regularizer::Zero,
            Regularizer::L1 { lambda: 1.0 },
            Regularizer::Quadratic { weight: 2.0, center: v(&[0.5, -1.0]) },
            Regularizer::Indicator(ConvexSet::LowerBound(0.0)),
            Regularizer::Indicator(ConvexSet::Ball { radius: 1.0 }),
        ];
        for (i, op) in ops.iter().enumerate() {
            for t in [0.5, 1.0, 4.0] {
                let r = check_prox_characterization(op, t, &v(&[2.0, -0.3]), 100, i as u64, 1e-9).unwrap();
                assert!(r.pass, "{op:?} t={t}: {r:?}");
            }
        }
        let r = check_prox_characterization(&Regularizer::Zero, 3.0, &v(&[1.0]), 100, 0, 1e-9).unwrap();
        assert!(r.worst_violation <= 0.0);
    }

    struct BrokenL1;
    impl ProxOperator for BrokenL1 {
        fn prox(&self, _t: f64, x: &Vector) -> Vector {
            x.clone()
        }
        fn value(&self, u: &Vector) -> f64 {
            u.lp_norm(1)
        }
    }

    #[test]
    fn characterization_rejects_broken_operator() {
        let r = check_prox_characterization(&BrokenL1, 1.0, &v(&[2.0]), 100, 5, 1e-9).unwrap();
        assert!(!r.pass);
        assert!(r.worst_violation > 0.0);
        // at u = 1 the inequality reads 1 ≥ 2
        let w = 2.0;
        let deficit = w + 1.0 * (2.0 - w) * (1.0 - w) - 1.0;
        assert_eq!(deficit, 1.0);
    }

    proptest! {
        #[test]
        fn catalog_is_nonexpansive(
            a in proptest::collection::vec(-5.0f64..5.0, 3),
            b in proptest::collection::vec(-5.0f64..5.0, 3),
            t in 0.1f64..10.0,
        ) {
            let (a, b) = (v(&a), v(&b));
            let ops = [
                Regularizer::Zero,
                Regularizer::L1 { lambda: 0.7 },
                Regularizer::Quadratic { weight: 1.5, center: v(&[1.0, 0.0, -1.0]) },
                Regularizer::Indicator(ConvexSet::LowerBound(0.2)),
                Regularizer::Indicator(ConvexSet::Ball { radius: 1.0 }),
            ];
            for op in &ops {
                let d = (op.prox(t, &a) - op.prox(t, &b)).norm();
                prop_assert!(d <= (&a - &b).norm() + 1e-12);
            }
        }

        #[test]
        fn composite_step_descends(
            u in proptest::collection::vec(-3.0f64..3.0, 2),
            lambda in 0.0f64..2.0,
        ) {
            // h(u) = ½‖Mu − c‖² with L_h = ‖MᵀM‖ = 4
            let h = |u: &Vector| 0.5 * ((u[0] * 2.0 - 1.0).powi(2) + (u[1] - 0.5).powi(2));
            let gh = |u: &Vector| v(&[2.0 * (u[0] * 2.0 - 1.0), u[1] - 0.5]);
            let op = Regularizer::L1 { lambda };
            let slack = composite_step_descent(&h, &gh, 4.0, &op, 6.0, &v(&u)).unwrap();
            prop_assert!(slack <= 1e-10);
        }
    }
}
