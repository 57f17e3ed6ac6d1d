//! Two-block problems `Ψ(x, y) = f(x) + H(x, y) + g(y)` described by oracles.
//!
//! `f` and `g` are proper, lower semicontinuous and convex, and may take the
//! value `+∞` (returned as [`f64::INFINITY`]) outside their domains. `H` is
//! convex and continuously differentiable on `dom f × dom g`. Everything a
//! solver or certificate needs is exposed as a pure, thread-safe closure so
//! that instances can be shared across workers.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{concat, Vector};

/// Joint iterate `z = (x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    pub x: Vector,
    pub y: Vector,
}

impl BlockVector {
    pub fn new(x: Vector, y: Vector) -> Self {
        Self { x, y }
    }

    pub fn from_slices(x: &[f64], y: &[f64]) -> Self {
        Self::new(Vector::from_column_slice(x), Vector::from_column_slice(y))
    }

    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self::new(Vector::zeros(n1), Vector::zeros(n2))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.y.norm_squared()).sqrt()
    }

    pub fn distance(&self, other: &BlockVector) -> f64 {
        ((&self.x - &other.x).norm_squared() + (&self.y - &other.y).norm_squared()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    /// Stacks the blocks into one vector of length `n1 + n2`.
    pub fn stacked(&self) -> Vector {
        concat(&self.x, &self.y)
    }

    /// Inverse of [`BlockVector::stacked`].
    pub fn split(v: &Vector, n1: usize) -> Self {
        let x = Vector::from_iterator(n1, v.iter().take(n1).copied());
        let y = Vector::from_iterator(v.len() - n1, v.iter().skip(n1).copied());
        Self { x, y }
    }
}

impl fmt::Display for BlockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x: Vec<String> = self.x.iter().map(|v| format!("{v}")).collect();
        let y: Vec<String> = self.y.iter().map(|v| format!("{v}")).collect();
        write!(f, "(x=[{}], y=[{}])", x.join(", "), y.join(", "))
    }
}

pub type BlockValue = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type CouplingValue = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;
pub type CouplingGradient = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
/// `(t, point) ↦ prox_t(point)` with the quadratic weighted by `t`.
pub type ProxMap = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;
/// Exact block minimizer given the other block.
pub type BlockMinimizer = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;
/// `(other block, weight, anchor) ↦ argmin { H + f + weight/2 ‖· − anchor‖² }`.
pub type RegularizedMinimizer = Arc<dyn Fn(&Vector, f64, &Vector) -> Result<Vector> + Send + Sync>;
pub type BlockLipschitz = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;

/// Known solution of an instance, used by the distance-bound and envelope checks.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub z_star: BlockVector,
    pub psi_star: f64,
    /// Smallest Hessian eigenvalue of `Ψ` when `Ψ` is a strongly convex
    /// quadratic; enables the analytic level-set radius.
    pub curvature: Option<f64>,
}

/// Bounds on the block Lipschitz moduli along a generated sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBounds {
    pub lambda1_minus: f64,
    pub lambda1_plus: f64,
    pub lambda2_minus: f64,
    pub lambda2_plus: f64,
    pub lambda3_plus: f64,
    pub lambda4_plus: f64,
}

impl LipschitzBounds {
    /// Bounds for instances whose moduli do not depend on the iterate.
    pub fn constant(l1: f64, l2: f64, l3: f64, l4: f64) -> Self {
        Self {
            lambda1_minus: l1,
            lambda1_plus: l1,
            lambda2_minus: l2,
            lambda2_plus: l2,
            lambda3_plus: l3,
            lambda4_plus: l4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("lambda1", self.lambda1_minus, self.lambda1_plus),
            ("lambda2", self.lambda2_minus, self.lambda2_plus),
        ];
        for (name, lo, hi) in pairs {
            if !(lo > 0.0) || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "{name}: need 0 < minus <= plus, got minus={lo}, plus={hi}"
                )));
            }
        }
        if self.lambda3_plus < 0.0 || self.lambda4_plus < 0.0 {
            return Err(Error::InvalidArgument("lambda3/lambda4 must be nonnegative".into()));
        }
        Ok(())
    }

    /// Tightest bounds consistent with the given iterates. Moduli whose oracle
    /// is absent are reported as `+∞`; `L₁`/`L₂` oracles are required.
    pub fn observe(problem: &SeparableProblem, iterates: &[BlockVector]) -> Result<Self> {
        let l1 = problem.require_l1()?;
        let l2 = problem.require_l2()?;
        let mut b = Self {
            lambda1_minus: f64::INFINITY,
            lambda1_plus: 0.0,
            lambda2_minus: f64::INFINITY,
            lambda2_plus: 0.0,
            lambda3_plus: if problem.lip_l3.is_some() { 0.0 } else { f64::INFINITY },
            lambda4_plus: if problem.lip_l4.is_some() { 0.0 } else { f64::INFINITY },
        };
        for z in iterates {
            let v1 = l1(&z.y);
            let v2 = l2(&z.x);
            b.lambda1_minus = b.lambda1_minus.min(v1);
            b.lambda1_plus = b.lambda1_plus.max(v1);
            b.lambda2_minus = b.lambda2_minus.min(v2);
            b.lambda2_plus = b.lambda2_plus.max(v2);
            if let Some(l3) = &problem.lip_l3 {
                b.lambda3_plus = b.lambda3_plus.max(l3(&z.y));
            }
            if let Some(l4) = &problem.lip_l4 {
                b.lambda4_plus = b.lambda4_plus.max(l4(&z.x));
            }
        }
        Ok(b)
    }

    /// Lists every iterate whose moduli fall outside these bounds.
    pub fn violations(&self, problem: &SeparableProblem, iterates: &[BlockVector]) -> Vec<BoundViolation> {
        let rel = |bound: f64| 1e-12 * bound.abs().max(1.0);
        let mut out = Vec::new();
        for (k, z) in iterates.iter().enumerate() {
            if let Some(l1) = &problem.lip_l1 {
                let v = l1(&z.y);
                if v < self.lambda1_minus - rel(self.lambda1_minus) {
                    out.push(BoundViolation::new(k, "L1(y^k) >= lambda1_minus", v, self.lambda1_minus));
                }
                if v > self.lambda1_plus + rel(self.lambda1_plus) {
                    out.push(BoundViolation::new(k, "L1(y^k) <= lambda1_plus", v, self.lambda1_plus));
                }
            }
            if let Some(l2) = &problem.lip_l2 {
                let v = l2(&z.x);
                if v < self.lambda2_minus - rel(self.lambda2_minus) {
                    out.push(BoundViolation::new(k, "L2(x^k) >= lambda2_minus", v, self.lambda2_minus));
                }
                if v > self.lambda2_plus + rel(self.lambda2_plus) {
                    out.push(BoundViolation::new(k, "L2(x^k) <= lambda2_plus", v, self.lambda2_plus));
                }
            }
            if let Some(l3) = &problem.lip_l3 {
                let v = l3(&z.y);
                if v > self.lambda3_plus + rel(self.lambda3_plus) {
                    out.push(BoundViolation::new(k, "L3(y^k) <= lambda3_plus", v, self.lambda3_plus));
                }
            }
            if let Some(l4) = &problem.lip_l4 {
                let v = l4(&z.x);
                if v > self.lambda4_plus + rel(self.lambda4_plus) {
                    out.push(BoundViolation::new(k, "L4(x^k) <= lambda4_plus", v, self.lambda4_plus));
                }
            }
        }
        out
    }
}

/// An iterate at which an observed modulus leaves its declared bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub k: usize,
    pub bound: String,
    pub observed: f64,
    pub declared: f64,
}

impl BoundViolation {
    fn new(k: usize, bound: &str, observed: f64, declared: f64) -> Self {
        Self { k, bound: bound.to_string(), observed, declared }
    }
}

/// Oracle bundle for `f`, `g` and `H`.
///
/// The mandatory oracles are set by [`SeparableProblem::new`]; optional ones
/// (exact minimizers, Lipschitz moduli, known optimum) are attached with the
/// `with_*` methods. Solvers that need an absent oracle fail before the first
/// iteration with [`Error::MissingRequirement`].
#[derive(Clone)]
pub struct SeparableProblem {
    pub name: String,
    pub n1: usize,
    pub n2: usize,
    pub f_value: BlockValue,
    pub g_value: BlockValue,
    pub h_value: CouplingValue,
    pub grad_x_h: CouplingGradient,
    pub grad_y_h: CouplingGradient,
    pub prox_f: ProxMap,
    pub prox_g: ProxMap,
    pub exact_argmin_x: Option<BlockMinimizer>,
    pub exact_argmin_y: Option<BlockMinimizer>,
    pub regularized_argmin_x: Option<RegularizedMinimizer>,
    pub regularized_argmin_y: Option<RegularizedMinimizer>,
    /// `y ↦ L₁(y)`, modulus of `∇ₓH(·, y)`.
    pub lip_l1: Option<BlockLipschitz>,
    /// `x ↦ L₂(x)`, modulus of `∇_yH(x, ·)`.
    pub lip_l2: Option<BlockLipschitz>,
    /// `y ↦ L₃(y)`, modulus of `x ↦ ∇_yH(x, y)`.
    pub lip_l3: Option<BlockLipschitz>,
    /// `x ↦ L₄(x)`, modulus of `y ↦ ∇ₓH(x, y)`.
    pub lip_l4: Option<BlockLipschitz>,
    /// Modulus of the full gradient `∇H`.
    pub lip_l5: Option<f64>,
    pub bounds: Option<LipschitzBounds>,
    pub optimum: Option<Optimum>,
}

impl fmt::Debug for SeparableProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableProblem")
            .field("name", &self.name)
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .field("exact_argmin_x", &self.exact_argmin_x.is_some())
            .field("exact_argmin_y", &self.exact_argmin_y.is_some())
            .field("lip_l5", &self.lip_l5)
            .field("bounds", &self.bounds)
            .field("optimum", &self.optimum)
            .finish_non_exhaustive()
    }
}

impl SeparableProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n1: usize,
        n2: usize,
        f_value: BlockValue,
        g_value: BlockValue,
        h_value: CouplingValue,
        grad_x_h: CouplingGradient,
        grad_y_h: CouplingGradient,
        prox_f: ProxMap,
        prox_g: ProxMap,
    ) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "block dimensions must be positive, got ({n1}, {n2})"
            )));
        }
        Ok(Self {
            name: name.into(),
            n1,
            n2,
            f_value,
            g_value,
            h_value,
            grad_x_h,
            grad_y_h,
            prox_f,
            prox_g,
            exact_argmin_x: None,
            exact_argmin_y: None,
            regularized_argmin_x: None,
            regularized_argmin_y: None,
            lip_l1: None,
            lip_l2: None,
            lip_l3: None,
            lip_l4: None,
            lip_l5: None,
            bounds: None,
            optimum: None,
        })
    }

    pub fn with_exact_argmin_x(mut self, oracle: BlockMinimizer) -> Self {
        self.exact_argmin_x = Some(oracle);
        self
    }

    pub fn with_exact_argmin_y(mut self, oracle: BlockMinimizer) -> Self {
        self.exact_argmin_y = Some(oracle);
        self
    }

    pub fn with_regularized_argmin_x(mut self, oracle: RegularizedMinimizer) -> Self {
        self.regularized_argmin_x = Some(oracle);
        self
    }

    pub fn with_regularized_argmin_y(mut self, oracle: RegularizedMinimizer) -> Self {
        self.regularized_argmin_y = Some(oracle);
        self
    }

    pub fn with_lipschitz(
        mut self,
        l1: Option<BlockLipschitz>,
        l2: Option<BlockLipschitz>,
        l3: Option<BlockLipschitz>,
        l4: Option<BlockLipschitz>,
        l5: Option<f64>,
    ) -> Self {
        self.lip_l1 = l1;
        self.lip_l2 = l2;
        self.lip_l3 = l3;
        self.lip_l4 = l4;
        self.lip_l5 = l5;
        self
    }

    /// Constant moduli, declared bounds set to the same constants.
    pub fn with_constant_lipschitz(self, l1: f64, l2: f64, l3: f64, l4: f64, l5: f64) -> Self {
        let mut p = self.with_lipschitz(
            Some(Arc::new(move |_: &Vector| l1)),
            Some(Arc::new(move |_: &Vector| l2)),
            Some(Arc::new(move |_: &Vector| l3)),
            Some(Arc::new(move |_: &Vector| l4)),
            Some(l5),
        );
        p.bounds = Some(LipschitzBounds::constant(l1, l2, l3, l4));
        p
    }

    pub fn with_bounds(mut self, bounds: LipschitzBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_optimum(mut self, optimum: Optimum) -> Self {
        self.optimum = Some(optimum);
        self
    }

    pub fn check_dims(&self, z: &BlockVector) -> Result<()> {
        if z.dims() != (self.n1, self.n2) {
            return Err(Error::InvalidArgument(format!(
                "iterate has dimensions {:?}, problem expects ({}, {})",
                z.dims(),
                self.n1,
                self.n2
            )));
        }
        Ok(())
    }

    /// `Ψ(z)`; see [`psi_value`].
    pub fn psi(&self, z: &BlockVector) -> Result<f64> {
        psi_value(self, z)
    }

    pub fn require_exact_argmin_x(&self) -> Result<&BlockMinimizer> {
        self.exact_argmin_x
            .as_ref()
            .ok_or_else(|| missing(&self.name, "exact_argmin_x (exact x-block minimizer)"))
    }

    pub fn require_exact_argmin_y(&self) -> Result<&BlockMinimizer> {
        self.exact_argmin_y
            .as_ref()
            .ok_or_else(|| missing(&self.name, "exact_argmin_y (exact y-block minimizer)"))
    }

    pub fn require_regularized_argmin_x(&self) -> Result<&RegularizedMinimizer> {
        self.regularized_argmin_x
            .as_ref()
            .ok_or_else(|| missing(&self.name, "regularized_argmin_x (proximal x-subproblem solver)"))
    }

    pub fn require_regularized_argmin_y(&self) -> Result<&RegularizedMinimizer> {
        self.regularized_argmin_y
            .as_ref()
            .ok_or_else(|| missing(&self.name, "regularized_argmin_y (proximal y-subproblem solver)"))
    }

    pub fn require_l1(&self) -> Result<&BlockLipschitz> {
        self.lip_l1.as_ref().ok_or_else(|| missing(&self.name, "lip_L1 (Lipschitz modulus L1(y))"))
    }

    pub fn require_l2(&self) -> Result<&BlockLipschitz> {
        self.lip_l2.as_ref().ok_or_else(|| missing(&self.name, "lip_L2 (Lipschitz modulus L2(x))"))
    }

    pub fn require_l3(&self) -> Result<&BlockLipschitz> {
        self.lip_l3.as_ref().ok_or_else(|| missing(&self.name, "lip_L3 (Lipschitz modulus L3(y))"))
    }

    pub fn require_l4(&self) -> Result<&BlockLipschitz> {
        self.lip_l4.as_ref().ok_or_else(|| missing(&self.name, "lip_L4 (Lipschitz modulus L4(x))"))
    }

    pub fn require_l5(&self) -> Result<f64> {
        self.lip_l5.ok_or_else(|| missing(&self.name, "lip_L5 (Lipschitz modulus of the full gradient)"))
    }

    pub fn require_bounds(&self) -> Result<LipschitzBounds> {
        self.bounds.ok_or_else(|| missing(&self.name, "declared LipschitzBounds"))
    }

    pub fn require_optimum(&self) -> Result<&Optimum> {
        self.optimum.as_ref().ok_or_else(|| missing(&self.name, "known optimum (z*, psi*)"))
    }
}

fn missing(name: &str, what: &str) -> Error {
    Error::MissingRequirement(format!("{what} is required but not provided by problem '{name}'"))
}

/// `Ψ(z) = f(x) + H(x, y) + g(y)`, `+∞` when `x ∉ dom f` or `y ∉ dom g`.
pub fn psi_value(problem: &SeparableProblem, z: &BlockVector) -> Result<f64> {
    problem.check_dims(z)?;
    let f = (problem.f_value)(&z.x);
    if f == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let g = (problem.g_value)(&z.y);
    if g == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(f + (problem.h_value)(&z.x, &z.y) + g)
}
