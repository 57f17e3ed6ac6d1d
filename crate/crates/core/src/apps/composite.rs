//! `minimize f(x) + g(Ax)` through the penalty splitting
//! `f(x) + g(y) + (ρ/2)‖Ax − y‖²`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::apps::inner::accelerated_prox_gradient;
use crate::apps::spectral::estimate_spectral_norm;
use crate::error::{Error, Result};
use crate::linalg::{gram_spectral_norm, solve_spd, symmetric_extreme_eigenvalues, Matrix, Vector};
use crate::problem::{BlockMinimizer, BlockVector, Optimum, RegularizedMinimizer, SeparableProblem};
use crate::prox::{ConvexSet, ProxOperator, Regularizer};

/// Relative stationarity tolerance for iterative x-subproblem solves.
pub const INNER_TOLERANCE: f64 = 1e-13;
pub const DEFAULT_INNER_MAX_ITER: usize = 20_000;
/// `γ` used by [`CompositeInstance::default_step`] when none is given.
pub const DEFAULT_GAMMA: f64 = 1.01;

#[derive(Clone, Debug)]
pub struct CompositeInstance {
    pub a: Matrix,
    pub rho: f64,
    pub f: Regularizer,
    pub g: Regularizer,
    /// Upper bound on `‖AAᵀ‖`.
    pub spectral_bound: f64,
    pub inner_max_iter: usize,
}

/// How the auxiliary problem's x-subproblems are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XSubproblem {
    /// Linear solve; `f` is zero or quadratic.
    ClosedForm,
    /// Accelerated proximal gradient to a certified residual.
    Iterative,
}

impl CompositeInstance {
    /// Uses the exact `‖AAᵀ‖` from a dense eigensolve.
    pub fn new(a: Matrix, rho: f64, f: Regularizer, g: Regularizer) -> Result<Self> {
        let bound = gram_spectral_norm(&a);
        let inst = Self { a, rho, f, g, spectral_bound: bound, inner_max_iter: DEFAULT_INNER_MAX_ITER };
        inst.validate_terms()?;
        Ok(inst)
    }

    /// Uses a caller-supplied bound, rejected if it is below a power-iteration
    /// lower estimate of `‖AAᵀ‖`.
    pub fn with_spectral_bound(a: Matrix, rho: f64, f: Regularizer, g: Regularizer, bound: f64) -> Result<Self> {
        let inst = Self { a, rho, f, g, spectral_bound: bound, inner_max_iter: DEFAULT_INNER_MAX_ITER };
        inst.validate_terms()?;
        let est = estimate_spectral_norm(&inst.a, 1e-12, 10_000, 0)?;
        if !(bound >= est.value * (1.0 - 1e-9)) {
            return Err(Error::OracleContract(format!(
                "contract violation: spectral_bound {bound} is below the power-iteration estimate {} of ||AA^T||",
                est.value
            )));
        }
        Ok(inst)
    }

    pub fn with_inner_max_iter(mut self, n: usize) -> Self {
        self.inner_max_iter = n;
        self
    }

    fn validate_terms(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {}", self.rho)));
        }
        if self.a.nrows() == 0 || self.a.ncols() == 0 {
            return Err(Error::InvalidArgument("A must be nonempty".into()));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("A has non-finite entries".into()));
        }
        check_term_dims("f", &self.f, self.n())?;
        check_term_dims("g", &self.g, self.m())
    }

    /// Dimension of `x`.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Dimension of `y`.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// `f(x) + g(Ax)`.
    pub fn objective(&self, x: &Vector) -> f64 {
        self.f.value(x) + self.g.value(&(&self.a * x))
    }

    /// `L₁ = ρ‖AᵀA‖`.
    pub fn l1(&self) -> f64 {
        self.rho * self.spectral_bound
    }

    /// `c = γρ‖AAᵀ‖`, requiring `γ > 1`.
    pub fn default_step(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 1.0) {
            return Err(Error::InvalidPolicy(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(gamma * self.l1())
    }

    pub fn x_subproblem(&self) -> Option<XSubproblem> {
        let gram_pd = symmetric_extreme_eigenvalues(&self.a.tr_mul(&self.a)).0 > 1e-12 * self.spectral_bound.max(1.0);
        match &self.f {
            Regularizer::Quadratic { weight, .. } if *weight > 0.0 => Some(XSubproblem::ClosedForm),
            Regularizer::Zero | Regularizer::Quadratic { .. } if gram_pd => Some(XSubproblem::ClosedForm),
            _ if gram_pd => Some(XSubproblem::Iterative),
            _ => None,
        }
    }

    /// Known optimum when `f` and `g` are quadratic (or zero) and the
    /// joint Hessian is positive definite.
    pub fn quadratic_optimum(&self) -> Option<Optimum> {
        let (wf, bf) = quadratic_parts(&self.f, self.n())?;
        let (wg, bg) = quadratic_parts(&self.g, self.m())?;
        let (n, m, rho) = (self.n(), self.m(), self.rho);
        let mut hess = Matrix::zeros(n + m, n + m);
        let ata = self.a.tr_mul(&self.a) * rho;
        hess.view_mut((0, 0), (n, n)).copy_from(&(ata + Matrix::identity(n, n) * wf));
        hess.view_mut((0, n), (n, m)).copy_from(&(self.a.transpose() * -rho));
        hess.view_mut((n, 0), (m, n)).copy_from(&(&self.a * -rho));
        hess.view_mut((n, n), (m, m)).copy_from(&(Matrix::identity(m, m) * (wg + rho)));
        let rhs = crate::linalg::concat(&(bf * wf), &(bg * wg));
        let (lmin, _) = symmetric_extreme_eigenvalues(&hess);
        if !(lmin > 0.0) {
            return None;
        }
        let sol = solve_spd(&hess, &rhs).ok()?;
        let z_star = BlockVector::split(&sol, n);
        let x = &z_star.x;
        let psi_star = self.f.value(x) + self.g.value(&z_star.y) + 0.5 * rho * (&self.a * x - &z_star.y).norm_squared();
        Some(Optimum { z_star, psi_star, curvature: Some(lmin) })
    }
}

fn check_term_dims(name: &str, term: &Regularizer, dim: usize) -> Result<()> {
    let bad = |what: &str, len: usize| {
        Err(Error::InvalidArgument(format!("{name}: {what} has length {len}, expected {dim}")))
    };
    match term {
        Regularizer::L1 { lambda } if !(*lambda >= 0.0) => {
            Err(Error::InvalidArgument(format!("{name}: l1 weight must be nonnegative, got {lambda}")))
        }
        Regularizer::Quadratic { weight, .. } if !(*weight >= 0.0) => {
            Err(Error::InvalidArgument(format!("{name}: quadratic weight must be nonnegative, got {weight}")))
        }
        Regularizer::Quadratic { center, .. } if center.len() != dim => bad("center", center.len()),
        Regularizer::Indicator(ConvexSet::Point(p)) if p.len() != dim => bad("point", p.len()),
        Regularizer::Indicator(ConvexSet::Box { lower, upper }) => {
            if lower.len() != dim || upper.len() != dim {
                return bad("box bounds", lower.len());
            }
            if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
                return Err(Error::InvalidArgument(format!("{name}: box has lower > upper")));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn quadratic_parts(term: &Regularizer, dim: usize) -> Option<(f64, Vector)> {
    match term {
        Regularizer::Zero => Some((0.0, Vector::zeros(dim))),
        Regularizer::Quadratic { weight, center } => Some((*weight, center.clone())),
        _ => None,
    }
}

/// `ρAᵀ(Ax − y)`, shared by the generic oracle and the specialized step so
/// both paths round identically.
fn coupling_grad_x(a: &Matrix, rho: f64, x: &Vector, y: &Vector) -> Vector {
    a.tr_mul(&(a * x - y)) * rho
}

/// `argmin_x f(x) + (ρ/2)‖Ax − y‖² + (c/2)‖x − anchor‖²`.
fn solve_x(inst: &CompositeInstance, y: &Vector, c: f64, anchor: &Vector) -> Result<Vector> {
    let (a, rho, n) = (&inst.a, inst.rho, inst.n());
    if let Some((w, b)) = quadratic_parts(&inst.f, n) {
        let m = a.tr_mul(a) * rho + Matrix::identity(n, n) * (w + c);
        let rhs = b * w + a.tr_mul(y) * rho + anchor * c;
        return solve_spd(&m, &rhs).map_err(|_| {
            Error::OracleContract("x-subproblem system is not positive definite".into())
        });
    }
    let lip = rho * inst.spectral_bound + c;
    let mu = rho * symmetric_extreme_eigenvalues(&a.tr_mul(a)).0.max(0.0) + c;
    let out = accelerated_prox_gradient(
        |x| coupling_grad_x(a, rho, x, y) + (x - anchor) * c,
        |t, p| inst.f.prox(t, p),
        lip,
        mu,
        anchor.clone(),
        INNER_TOLERANCE,
        inst.inner_max_iter,
    )?;
    Ok(out.x)
}

/// The auxiliary two-block problem with `H(x, y) = (ρ/2)‖Ax − y‖²`.
pub fn build_composite_auxiliary(inst: &CompositeInstance) -> Result<SeparableProblem> {
    inst.validate_terms()?;
    let shared = Arc::new(inst.clone());
    let (n, m, rho) = (inst.n(), inst.m(), inst.rho);

    let s = shared.clone();
    let f_value = Arc::new(move |x: &Vector| s.f.value(x));
    let s = shared.clone();
    let g_value = Arc::new(move |y: &Vector| s.g.value(y));
    let s = shared.clone();
    let h_value = Arc::new(move |x: &Vector, y: &Vector| 0.5 * s.rho * (&s.a * x - y).norm_squared());
    let s = shared.clone();
    let grad_x = Arc::new(move |x: &Vector, y: &Vector| coupling_grad_x(&s.a, s.rho, x, y));
    let s = shared.clone();
    let grad_y = Arc::new(move |x: &Vector, y: &Vector| (y - &s.a * x) * s.rho);
    let s = shared.clone();
    let prox_f = Arc::new(move |t: f64, v: &Vector| s.f.prox(t, v));
    let s = shared.clone();
    let prox_g = Arc::new(move |t: f64, v: &Vector| s.g.prox(t, v));

    let mut p = SeparableProblem::new(
        format!("composite-{}x{}", m, n),
        n,
        m,
        f_value,
        g_value,
        h_value,
        grad_x,
        grad_y,
        prox_f,
        prox_g,
    )?;

    let s = shared.clone();
    let argmin_y: BlockMinimizer = Arc::new(move |x: &Vector| Ok(s.g.prox(s.rho, &(&s.a * x))));
    let s = shared.clone();
    let reg_y: RegularizedMinimizer = Arc::new(move |x: &Vector, d: f64, anchor: &Vector| {
        let target = (&s.a * x * s.rho + anchor * d) / (s.rho + d);
        Ok(s.g.prox(s.rho + d, &target))
    });
    p = p.with_exact_argmin_y(argmin_y).with_regularized_argmin_y(reg_y);

    let s = shared.clone();
    let reg_x: RegularizedMinimizer =
        Arc::new(move |y: &Vector, c: f64, anchor: &Vector| solve_x(&s, y, c, anchor));
    p = p.with_regularized_argmin_x(reg_x);
    if inst.x_subproblem().is_some() {
        let s = shared.clone();
        let zeros = Vector::zeros(n);
        let argmin_x: BlockMinimizer = Arc::new(move |y: &Vector| solve_x(&s, y, 0.0, &zeros));
        p = p.with_exact_argmin_x(argmin_x);
    }

    let sb = inst.spectral_bound;
    p = p.with_constant_lipschitz(rho * sb, rho, rho * sb.sqrt(), rho * sb.sqrt(), rho * (1.0 + sb));
    if let Some(opt) = inst.quadratic_optimum() {
        p = p.with_optimum(opt);
    }
    Ok(p)
}

/// One prox-linearized x-step with weight `c` followed by `y = prox_ρ^g(Ax)`.
pub fn composite_variant1_step(inst: &CompositeInstance, x: &Vector, y: &Vector, c: f64) -> Result<(Vector, Vector)> {
    if x.len() != inst.n() || y.len() != inst.m() {
        return Err(Error::InvalidArgument(format!(
            "iterate dimensions ({}, {}) do not match instance ({}, {})",
            x.len(),
            y.len(),
            inst.n(),
            inst.m()
        )));
    }
    if !(c > inst.l1()) {
        return Err(Error::InvalidPolicy(format!(
            "c must exceed rho*||AA^T|| = {} (gamma > 1), got {c}",
            inst.l1()
        )));
    }
    let grad = coupling_grad_x(&inst.a, inst.rho, x, y);
    let x_next = inst.f.prox(c, &(x - grad / c));
    let y_next = inst.g.prox(inst.rho, &(&inst.a * &x_next));
    Ok((x_next, y_next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::check_gradient;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar() -> CompositeInstance {
        CompositeInstance::new(
            Matrix::identity(1, 1),
            1.0,
            Regularizer::Quadratic { weight: 1.0, center: Vector::zeros(1) },
            Regularizer::Quadratic { weight: 1.0, center: Vector::from_element(1, 1.0) },
        )
        .unwrap()
    }

    fn seeded(seed: u64) -> CompositeInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(15, 20, |_, _| rng.random_range(-1.0..1.0));
        let b = Vector::from_fn(15, |_, _| rng.random_range(-1.0..1.0));
        CompositeInstance::new(a, 1.0, Regularizer::L1 { lambda: 0.1 }, Regularizer::Quadratic { weight: 1.0, center: b })
            .unwrap()
    }

    #[test]
    fn scalar_family_recovered() {
        let p = build_composite_auxiliary(&scalar()).unwrap();
        let opt = p.optimum.as_ref().unwrap();
        assert_relative_eq!(opt.z_star.x[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(opt.z_star.y[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(opt.psi_star, 1.0 / 6.0, epsilon = 1e-14);
        assert_relative_eq!(opt.curvature.unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(p.lip_l5, Some(2.0));
        let z = BlockVector::from_slices(&[0.0], &[1.0]);
        assert_relative_eq!(p.psi(&z).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn variant1_step_by_hand() {
        let (x, y) = composite_variant1_step(&scalar(), &Vector::zeros(1), &Vector::from_element(1, 1.0), 2.0).unwrap();
        assert_relative_eq!(x[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(y[0], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_coupling_step_formula() {
        // with A = I: x⁺ = prox_c^f(x − (ρ/c)(x − y))
        let inst = CompositeInstance::new(
            Matrix::identity(3, 3),
            2.0,
            Regularizer::L1 { lambda: 0.3 },
            Regularizer::Zero,
        )
        .unwrap();
        let x = Vector::from_column_slice(&[1.0, -2.0, 0.1]);
        let y = Vector::from_column_slice(&[0.0, 1.0, 0.2]);
        let c = 5.0;
        let (xn, _) = composite_variant1_step(&inst, &x, &y, c).unwrap();
        let expect = crate::prox::prox_scaled_l1(c, 0.3, &(&x - (&x - &y) * (2.0 / c)));
        assert_relative_eq!(xn, expect, epsilon = 1e-15);
    }

    #[test]
    fn optimum_is_fixed_point() {
        let inst = scalar();
        let z = inst.quadratic_optimum().unwrap().z_star;
        let (x, y) = composite_variant1_step(&inst, &z.x, &z.y, 2.0).unwrap();
        assert_relative_eq!(x, z.x, epsilon = 1e-14);
        assert_relative_eq!(y, z.y, epsilon = 1e-14);
    }

    #[test]
    fn point_indicator_pins_y() {
        let b = Vector::from_column_slice(&[0.5, -1.0]);
        let inst = CompositeInstance::new(
            Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            1.0,
            Regularizer::Zero,
            Regularizer::Indicator(ConvexSet::Point(b.clone())),
        )
        .unwrap();
        let p = build_composite_auxiliary(&inst).unwrap();
        let y = (p.exact_argmin_y.as_ref().unwrap())(&Vector::from_column_slice(&[7.0, -3.0])).unwrap();
        assert_eq!(y, b);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = build_composite_auxiliary(&seeded(5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let z = BlockVector::new(
                Vector::from_fn(20, |_, _| rng.random_range(-1.0..1.0)),
                Vector::from_fn(15, |_, _| rng.random_range(-1.0..1.0)),
            );
            assert!(check_gradient(&p, &z, 1e-5).unwrap().max() <= 1e-6);
        }
    }

    #[test]
    fn policy_and_bound_errors() {
        let inst = scalar();
        assert!(matches!(inst.default_step(1.0), Err(Error::InvalidPolicy(_))));
        assert!(matches!(
            composite_variant1_step(&inst, &Vector::zeros(1), &Vector::zeros(1), 1.0),
            Err(Error::InvalidPolicy(_))
        ));
        let e = CompositeInstance::with_spectral_bound(
            Matrix::from_diagonal(&Vector::from_column_slice(&[3.0, 1.0])),
            1.0,
            Regularizer::Zero,
            Regularizer::Zero,
            4.0,
        )
        .unwrap_err();
        assert!(matches!(e, Error::OracleContract(_)));
        assert!(CompositeInstance::new(Matrix::identity(1, 1), 0.0, Regularizer::Zero, Regularizer::Zero).is_err());
    }

    #[test]
    fn iterative_x_subproblem_is_stationary() {
        // tall A so AᵀA is positive definite and the l1 x-step is unique
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Matrix::from_fn(8, 4, |_, _| rng.random_range(-1.0..1.0));
        let inst = CompositeInstance::new(a, 1.0, Regularizer::L1 { lambda: 0.5 }, Regularizer::Zero).unwrap();
        assert_eq!(inst.x_subproblem(), Some(XSubproblem::Iterative));
        let p = build_composite_auxiliary(&inst).unwrap();
        let y = Vector::from_fn(8, |_, _| rng.random_range(-2.0..2.0));
        let x = (p.exact_argmin_x.as_ref().unwrap())(&y).unwrap();
        // optimality: x = prox_L^f(x − ∇/L) for any L > 0
        let g = (p.grad_x_h)(&x, &y);
        let fixed = inst.f.prox(3.0, &(&x - g / 3.0));
        assert!((fixed - &x).norm() < 1e-11);
    }
}
