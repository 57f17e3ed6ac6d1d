//! Smoothed sum of norms `s(x) + Σ sqrt(‖A_i x + b_i‖² + ε²)` over a convex
//! set `X`, with IRLS and its linearized form.
//!
//! The auxiliary problem couples `x` with one scalar `y_i ≥ ε/2` per block:
//!
//! ```text
//! h_ε(x, y) = s(x) + ½ Σ ((‖A_i x + b_i‖² + ε²) / y_i + y_i)
//! ```
//!
//! Its exact y-step is `y_i = sqrt(‖A_i x + b_i‖² + ε²)`, so the IRLS weight
//! of block `i` is `1 / y_i`. Storing the reciprocal keeps `h_ε` jointly
//! convex; the x-iterates are the same either way.

use std::sync::Arc;

use crate::apps::inner::accelerated_prox_gradient;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, symmetric_extreme_eigenvalues, Matrix, Vector};
use crate::problem::{BlockMinimizer, BlockValue, SeparableProblem};
use crate::prox::{ConvexSet, Projector};
use crate::solvers::ForwardBackwardProblem;

/// Stationarity tolerance of the projected-gradient x-solve on a box.
pub const BOX_SOLVE_TOLERANCE: f64 = 1e-12;
const BOX_SOLVE_MAX_ITER: usize = 200_000;

/// The smooth convex term `s`.
#[derive(Clone)]
pub enum SmoothTerm {
    Zero,
    /// `½‖Cx − d‖²`.
    LeastSquares { c: Matrix, d: Vector },
    Custom {
        value: BlockValue,
        grad: Arc<dyn Fn(&Vector) -> Vector + Send + Sync>,
        lipschitz: f64,
    },
}

impl std::fmt::Debug for SmoothTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SmoothTerm::Zero => write!(f, "Zero"),
            SmoothTerm::LeastSquares { c, .. } => write!(f, "LeastSquares({}x{})", c.nrows(), c.ncols()),
            SmoothTerm::Custom { lipschitz, .. } => write!(f, "Custom(L={lipschitz})"),
        }
    }
}

/// One affine block `A_i x + b_i`.
#[derive(Clone, Debug)]
pub struct NormBlock {
    pub a: Matrix,
    pub b: Vector,
}

#[derive(Clone, Debug)]
pub struct SumOfNormsInstance {
    pub n: usize,
    pub smooth: SmoothTerm,
    pub blocks: Vec<NormBlock>,
    pub domain: ConvexSet,
    pub epsilon: f64,
}

impl SumOfNormsInstance {
    pub fn new(n: usize, smooth: SmoothTerm, blocks: Vec<NormBlock>, domain: ConvexSet, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if n == 0 || blocks.is_empty() {
            return Err(Error::InvalidArgument("need n >= 1 and at least one block".into()));
        }
        for (i, blk) in blocks.iter().enumerate() {
            if blk.a.ncols() != n || blk.a.nrows() != blk.b.len() || blk.b.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "block {i}: A is {}x{}, b has length {}; expected {} columns and matching rows",
                    blk.a.nrows(),
                    blk.a.ncols(),
                    blk.b.len(),
                    n
                )));
            }
        }
        match &smooth {
            SmoothTerm::LeastSquares { c, d } if c.ncols() != n || c.nrows() != d.len() => {
                return Err(Error::InvalidArgument("smooth term: C and d have inconsistent shapes".into()));
            }
            SmoothTerm::Custom { lipschitz, .. } if !(*lipschitz >= 0.0) => {
                return Err(Error::InvalidArgument("smooth term: Lipschitz constant must be nonnegative".into()));
            }
            _ => {}
        }
        match &domain {
            ConvexSet::Box { lower, upper } if lower.len() != n || upper.len() != n => {
                return Err(Error::InvalidArgument("box bounds must have length n".into()));
            }
            ConvexSet::Point(p) if p.len() != n => {
                return Err(Error::InvalidArgument("point must have length n".into()));
            }
            _ => {}
        }
        Ok(Self { n, smooth, blocks, domain, epsilon })
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    fn residual(&self, i: usize, x: &Vector) -> Vector {
        &self.blocks[i].a * x + &self.blocks[i].b
    }

    /// `‖A_i x + b_i‖²` for every block.
    pub fn residual_sq(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.m(), |i, _| self.residual(i, x).norm_squared())
    }

    /// `sqrt(‖A_i x + b_i‖² + ε²)`, the exact y-step of the auxiliary problem.
    pub fn smoothed_norms(&self, x: &Vector) -> Vector {
        let e2 = self.epsilon * self.epsilon;
        self.residual_sq(x).map(|r| (r + e2).sqrt())
    }

    /// IRLS weights `1 / sqrt(‖A_i x + b_i‖² + ε²)`.
    pub fn weights(&self, x: &Vector) -> Vector {
        self.smoothed_norms(x).map(|v| 1.0 / v)
    }

    pub fn smooth_value(&self, x: &Vector) -> f64 {
        match &self.smooth {
            SmoothTerm::Zero => 0.0,
            SmoothTerm::LeastSquares { c, d } => 0.5 * (c * x - d).norm_squared(),
            SmoothTerm::Custom { value, .. } => value(x),
        }
    }

    pub fn smooth_grad(&self, x: &Vector) -> Vector {
        match &self.smooth {
            SmoothTerm::Zero => Vector::zeros(self.n),
            SmoothTerm::LeastSquares { c, d } => c.tr_mul(&(c * x - d)),
            SmoothTerm::Custom { grad, .. } => grad(x),
        }
    }

    /// `∇s(x) + Σ w_i A_iᵀ(A_i x + b_i)`.
    pub fn weighted_gradient(&self, x: &Vector, weights: &Vector) -> Vector {
        let mut g = self.smooth_grad(x);
        for (i, blk) in self.blocks.iter().enumerate() {
            g += blk.a.tr_mul(&self.residual(i, x)) * weights[i];
        }
        g
    }

    /// `∇²s + Σ w_i A_iᵀA_i` when `s` is zero or least squares.
    fn weighted_hessian(&self, weights: &Vector) -> Option<Matrix> {
        let mut m = match &self.smooth {
            SmoothTerm::Zero => Matrix::zeros(self.n, self.n),
            SmoothTerm::LeastSquares { c, .. } => c.tr_mul(c),
            SmoothTerm::Custom { .. } => return None,
        };
        for (i, blk) in self.blocks.iter().enumerate() {
            m += blk.a.tr_mul(&blk.a) * weights[i];
        }
        Some(m)
    }

    /// Modulus of `x ↦ ∇s(x) + Σ w_i A_iᵀ(A_i x + b_i)`.
    pub fn weighted_lipschitz(&self, weights: &Vector) -> f64 {
        match self.weighted_hessian(weights) {
            Some(m) => symmetric_extreme_eigenvalues(&m).1.max(0.0),
            None => {
                let SmoothTerm::Custom { lipschitz, .. } = &self.smooth else { unreachable!() };
                let coupling: f64 = self
                    .blocks
                    .iter()
                    .enumerate()
                    .map(|(i, blk)| weights[i] * crate::linalg::gram_spectral_norm(&blk.a))
                    .sum();
                lipschitz + coupling
            }
        }
    }

    /// Lipschitz bound for the gradient of the smoothed objective: its
    /// Hessian is dominated by `∇²s + Σ A_iᵀA_i / ε`.
    pub fn smoothed_lipschitz(&self) -> f64 {
        self.weighted_lipschitz(&Vector::from_element(self.m(), 1.0 / self.epsilon))
    }

    /// `s(x) + Σ ‖A_i x + b_i‖`.
    pub fn nonsmooth_objective(&self, x: &Vector) -> f64 {
        self.domain.indicator(x) + self.smooth_value(x) + self.residual_sq(x).iter().map(|r| r.sqrt()).sum::<f64>()
    }

    /// `s(x) + Σ sqrt(‖A_i x + b_i‖² + ε²)`, `+∞` outside `X`.
    pub fn smoothed_objective(&self, x: &Vector) -> f64 {
        self.domain.indicator(x) + self.smooth_value(x) + self.smoothed_norms(x).sum()
    }

    /// Whether the weighted least-squares x-step has a built-in solver.
    pub fn has_x_solver(&self) -> bool {
        !matches!(self.smooth, SmoothTerm::Custom { .. })
            && matches!(self.domain, ConvexSet::Whole | ConvexSet::Box { .. })
    }

    /// `argmin_{x ∈ X} s(x) + ½ Σ w_i ‖A_i x + b_i‖²`.
    pub fn solve_weighted(&self, weights: &Vector) -> Result<Vector> {
        if weights.len() != self.m() {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                self.m(),
                weights.len()
            )));
        }
        let unavailable = || {
            Error::MissingRequirement(format!(
                "weighted least-squares x-subproblem solver is not available for s = {:?}, X = {:?}",
                self.smooth, self.domain
            ))
        };
        if !self.has_x_solver() {
            return Err(unavailable());
        }
        let hess = self.weighted_hessian(weights).ok_or_else(unavailable)?;
        let mut rhs = match &self.smooth {
            SmoothTerm::LeastSquares { c, d } => c.tr_mul(d),
            _ => Vector::zeros(self.n),
        };
        for (i, blk) in self.blocks.iter().enumerate() {
            rhs -= blk.a.tr_mul(&blk.b) * weights[i];
        }
        match &self.domain {
            ConvexSet::Whole => solve_spd(&hess, &rhs).map_err(|_| {
                Error::OracleContract("weighted least-squares system is singular".into())
            }),
            ConvexSet::Box { .. } => {
                let (mu, lip) = symmetric_extreme_eigenvalues(&hess);
                let start = self.domain.project(&solve_spd(&hess, &rhs).unwrap_or_else(|_| Vector::zeros(self.n)));
                let out = accelerated_prox_gradient(
                    |x| &hess * x - &rhs,
                    |_, p| self.domain.project(p),
                    lip,
                    mu.max(0.0),
                    start,
                    BOX_SOLVE_TOLERANCE,
                    BOX_SOLVE_MAX_ITER,
                )?;
                Ok(out.x)
            }
            _ => Err(unavailable()),
        }
    }

    /// The smoothed objective as a forward-backward problem: smooth part
    /// `s + Σ sqrt(·)`, nonsmooth part `δ(·, X)`.
    pub fn smoothed_forward_backward(&self) -> ForwardBackwardProblem {
        let inst = Arc::new(self.clone());
        let (i1, i2, i3, i4) = (inst.clone(), inst.clone(), inst.clone(), inst.clone());
        ForwardBackwardProblem {
            smooth_value: Arc::new(move |x: &Vector| i1.smooth_value(x) + i1.smoothed_norms(x).sum()),
            smooth_grad: Arc::new(move |x: &Vector| i2.weighted_gradient(x, &i2.weights(x))),
            nonsmooth_value: Arc::new(move |x: &Vector| i3.domain.indicator(x)),
            prox: Arc::new(move |_t: f64, x: &Vector| i4.domain.project(x)),
            smooth_lipschitz: Some(self.smoothed_lipschitz()),
        }
    }
}

/// One IRLS step: weighted least-squares x-step with `weights`, then the
/// weights at the new point.
pub fn irls_step(inst: &SumOfNormsInstance, x: &Vector, weights: &Vector) -> Result<(Vector, Vector)> {
    if x.len() != inst.n {
        return Err(Error::InvalidArgument(format!("x has length {}, expected {}", x.len(), inst.n)));
    }
    let x_next = inst.solve_weighted(weights)?;
    let w_next = inst.weights(&x_next);
    Ok((x_next, w_next))
}

/// One linearized IRLS step: `x⁺ = P_X(x − (∇s(x) + Σ w_i A_iᵀ(A_i x + b_i)) / c)`.
pub fn linearized_irls_step(
    inst: &SumOfNormsInstance,
    x: &Vector,
    weights: &Vector,
    c: f64,
) -> Result<(Vector, Vector)> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
    }
    if x.len() != inst.n || weights.len() != inst.m() {
        return Err(Error::InvalidArgument("x or weights have the wrong length".into()));
    }
    let g = inst.weighted_gradient(x, weights);
    let x_next = inst.domain.project(&(x - g / c));
    let w_next = inst.weights(&x_next);
    Ok((x_next, w_next))
}

/// The auxiliary problem in `(x, y)` with `f = δ(·, X)` and
/// `g = δ(·, [ε/2, ∞)^m)`.
pub fn build_sum_of_norms_auxiliary(inst: &SumOfNormsInstance) -> Result<SeparableProblem> {
    if !(inst.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", inst.epsilon)));
    }
    let shared = Arc::new(inst.clone());
    let floor = ConvexSet::LowerBound(inst.epsilon / 2.0);
    let (n, m, eps) = (inst.n, inst.m(), inst.epsilon);
    let e2 = eps * eps;

    let s = shared.clone();
    let f_value = Arc::new(move |x: &Vector| s.domain.indicator(x));
    let fl = floor.clone();
    let g_value = Arc::new(move |y: &Vector| fl.indicator(y));
    let s = shared.clone();
    let h_value = Arc::new(move |x: &Vector, y: &Vector| {
        if y.iter().any(|v| !(*v > 0.0)) {
            return f64::INFINITY;
        }
        let r = s.residual_sq(x);
        let coupling: f64 = r.iter().zip(y.iter()).map(|(ri, yi)| (ri + e2) / yi + yi).sum();
        s.smooth_value(x) + 0.5 * coupling
    });
    let s = shared.clone();
    let grad_x = Arc::new(move |x: &Vector, y: &Vector| s.weighted_gradient(x, &y.map(|v| 1.0 / v)));
    let s = shared.clone();
    let grad_y = Arc::new(move |x: &Vector, y: &Vector| {
        let r = s.residual_sq(x);
        Vector::from_fn(y.len(), |i, _| 0.5 * (1.0 - (r[i] + e2) / (y[i] * y[i])))
    });
    let s = shared.clone();
    let prox_f = Arc::new(move |_t: f64, x: &Vector| s.domain.project(x));
    let fl = floor.clone();
    let prox_g = Arc::new(move |_t: f64, y: &Vector| fl.project(y));

    let mut p = SeparableProblem::new(
        format!("sum-of-norms-{m}x{n}"),
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
    let argmin_y: BlockMinimizer = Arc::new(move |x: &Vector| Ok(s.smoothed_norms(x)));
    p = p.with_exact_argmin_y(argmin_y);
    if inst.has_x_solver() {
        let s = shared.clone();
        let argmin_x: BlockMinimizer = Arc::new(move |y: &Vector| s.solve_weighted(&y.map(|v| 1.0 / v)));
        p = p.with_exact_argmin_x(argmin_x);
    }

    let s1 = shared.clone();
    let s2 = shared.clone();
    let s4 = shared.clone();
    // on y ≥ ε/2: ∂²/∂y_i² of (r_i + ε²)/(2y_i) is at most 8(r_i + ε²)/ε³
    let l2 = Arc::new(move |x: &Vector| {
        s2.residual_sq(x).iter().map(|r| 8.0 * (r + e2) / (eps * e2)).fold(0.0, f64::max)
    });
    // ∂(∇ₓH)/∂y_i = −A_iᵀ(A_i x + b_i) / y_i², with 1/y_i² ≤ 4/ε²
    let l4 = Arc::new(move |x: &Vector| {
        let fro: f64 = (0..s4.m()).map(|i| s4.blocks[i].a.tr_mul(&s4.residual(i, x)).norm_squared()).sum();
        4.0 * fro.sqrt() / e2
    });
    p = p.with_lipschitz(
        Some(Arc::new(move |y: &Vector| s1.weighted_lipschitz(&y.map(|v| 1.0 / v)))),
        Some(l2),
        None,
        Some(l4),
        None,
    );
    Ok(p)
}
