use crate::error::{Error, Result};
use crate::problem::SeparableProblem;
use crate::solvers::trace::Variant;

/// Proximal weights `(c_k, d_k)` used by the proximal AM scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum AamSchedule {
    Constant { c: f64, d: f64 },
    /// Repeats the listed pairs with period `len`.
    Cyclic(Vec<(f64, f64)>),
}

impl AamSchedule {
    pub fn at(&self, k: usize) -> (f64, f64) {
        match self {
            AamSchedule::Constant { c, d } => (*c, *d),
            AamSchedule::Cyclic(pairs) => pairs[k % pairs.len()],
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            AamSchedule::Constant { c, d } => vec![*c, *d],
            AamSchedule::Cyclic(pairs) => pairs.iter().flat_map(|(c, d)| [*c, *d]).collect(),
        }
    }

    /// `inf {c_k, d_k}`.
    pub fn rho1(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `sup {c_k, d_k}`.
    pub fn rho2(&self) -> f64 {
        self.values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if let AamSchedule::Cyclic(p) = self {
            if p.is_empty() {
                return Err(Error::InvalidPolicy("AAM schedule must not be empty".into()));
            }
        }
        if !(self.rho1() > 0.0) || !self.rho2().is_finite() {
            return Err(Error::InvalidPolicy(format!(
                "AAM weights need rho1 = inf(c_k, d_k) > 0 and rho2 = sup(c_k, d_k) < inf, got rho1={}, rho2={}",
                self.rho1(),
                self.rho2()
            )));
        }
        Ok(())
    }
}

/// Step-size rule of each scheme.
///
/// * variant-I: `c_k = γ·L₁(y^k)`, `γ > 1`, exact y-step.
/// * variant-II: `c_k = γ·L₁(y^k)`, `d_k = γ·L₂(x^k)`, `γ > L₅/η` with
///   `η = min(λ₁⁻, λ₂⁻)/2` taken from the declared bounds.
/// * PALM: `c_k = γ·L₁(y^k)`, `d_k = γ·L₂(x^{k+1})`, `γ > 1`.
/// * AAM: user schedule with `0 < ρ₁ ≤ ρ₂ < ∞`.
#[derive(Clone, Debug, PartialEq)]
pub enum StepSizePolicy {
    Exact,
    Variant1 { gamma: f64 },
    Variant2 { gamma: f64 },
    Palm { gamma: f64 },
    Aam(AamSchedule),
}

impl StepSizePolicy {
    pub fn variant(&self) -> Variant {
        match self {
            StepSizePolicy::Exact => Variant::Am,
            StepSizePolicy::Variant1 { .. } => Variant::Variant1,
            StepSizePolicy::Variant2 { .. } => Variant::Variant2,
            StepSizePolicy::Palm { .. } => Variant::Palm,
            StepSizePolicy::Aam(_) => Variant::Aam,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            StepSizePolicy::Variant1 { gamma }
            | StepSizePolicy::Variant2 { gamma }
            | StepSizePolicy::Palm { gamma } => Some(*gamma),
            _ => None,
        }
    }

    pub fn schedule(&self) -> Option<&AamSchedule> {
        match self {
            StepSizePolicy::Aam(s) => Some(s),
            _ => None,
        }
    }

    /// Checks the theorem hypotheses on the policy parameters, and the oracles
    /// the corresponding scheme needs, without running anything.
    pub fn validate(&self, problem: &SeparableProblem) -> Result<()> {
        match self {
            StepSizePolicy::Exact => {
                problem.require_exact_argmin_x()?;
                problem.require_exact_argmin_y()?;
            }
            StepSizePolicy::Variant1 { gamma } => {
                require_gamma_above_one(*gamma)?;
                problem.require_l1()?;
                problem.require_exact_argmin_y()?;
            }
            StepSizePolicy::Palm { gamma } => {
                require_gamma_above_one(*gamma)?;
                problem.require_l1()?;
                problem.require_l2()?;
            }
            StepSizePolicy::Variant2 { gamma } => {
                problem.require_l1()?;
                problem.require_l2()?;
                let threshold = variant2_gamma_threshold(problem)?;
                if !(*gamma > threshold) {
                    return Err(Error::InvalidPolicy(format!(
                        "gamma must exceed L5/eta = {threshold}, got {gamma}"
                    )));
                }
            }
            StepSizePolicy::Aam(schedule) => {
                schedule.validate()?;
                problem.require_regularized_argmin_x()?;
                problem.require_regularized_argmin_y()?;
            }
        }
        Ok(())
    }
}

fn require_gamma_above_one(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPolicy(format!("gamma must exceed 1, got {gamma}")))
    }
}

/// `η = min(λ₁⁻/2, λ₂⁻/2)` from the declared bounds.
pub fn variant2_eta(problem: &SeparableProblem) -> Result<f64> {
    let b = problem.require_bounds()?;
    b.validate()?;
    Ok((b.lambda1_minus / 2.0).min(b.lambda2_minus / 2.0))
}

/// Lower bound `L₅/η` that variant-II's `γ` must exceed.
pub fn variant2_gamma_threshold(problem: &SeparableProblem) -> Result<f64> {
    let l5 = problem.require_l5()?;
    Ok(l5 / variant2_eta(problem)?)
}
