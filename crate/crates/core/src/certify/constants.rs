use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{LipschitzBounds, SeparableProblem};
use crate::solvers::{IterationTrace, StepSizePolicy, Variant};

/// Which displacement enters properties (a) and (b).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    XBlock,
    FullZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusSource {
    Analytic,
    Sampled,
    /// No optimum is known; only `τ₁` is meaningful.
    Unknown,
}

/// The level-set radius `R` and how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusEstimate {
    pub value: f64,
    pub source: RadiusSource,
}

impl RadiusEstimate {
    pub fn unknown() -> Self {
        Self { value: 0.0, source: RadiusSource::Unknown }
    }
}

/// Scheme parameters that enter the constants, beyond the moduli bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoremInputs {
    pub gamma: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub l5: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremConstants {
    pub variant: Variant,
    pub tau1: f64,
    pub tau2: f64,
    /// `τ₁/τ₂²`; absent when `τ₂ = 0` (the bound is then vacuous in `α`).
    pub alpha: Option<f64>,
    pub envelope_c: f64,
    pub distance: DistanceKind,
    pub radius: RadiusEstimate,
    pub bounds: LipschitzBounds,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub l5: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
}

impl TheoremConstants {
    /// `α` with `τ₂ = 0` read as `+∞`.
    pub fn alpha_value(&self) -> f64 {
        self.alpha.unwrap_or(f64::INFINITY)
    }
}

fn hypothesis(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidPolicy(msg()))
    }
}

fn require(name: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidArgument(format!("{name} is required for these constants")))
}

fn finite_lower(name: &str, lo: f64, hi: f64) -> Result<()> {
    hypothesis(lo > 0.0 && lo <= hi && hi.is_finite(), || {
        format!("need 0 < {name}_minus <= {name}_plus < inf, got {lo} and {hi}")
    })
}

/// Fills `τ₁`, `τ₂`, `α = τ₁/τ₂²` and the envelope constant `C = 4/α` for one scheme.
pub fn compose_constants(
    variant: Variant,
    bounds: &LipschitzBounds,
    inputs: &TheoremInputs,
    radius: RadiusEstimate,
) -> Result<TheoremConstants> {
    let r = radius.value;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be finite and nonnegative, got {r}")));
    }
    let b = bounds;
    let mut out = TheoremConstants {
        variant,
        tau1: 0.0,
        tau2: 0.0,
        alpha: None,
        envelope_c: 0.0,
        distance: DistanceKind::FullZ,
        radius,
        bounds: *bounds,
        gamma: inputs.gamma,
        eta: None,
        l5: inputs.l5,
        rho1: inputs.rho1,
        rho2: inputs.rho2,
    };
    match variant {
        Variant::Am => {
            return Err(Error::InvalidArgument(
                "plain alternating minimization has no rate constants to certify".into(),
            ))
        }
        Variant::Variant1 => {
            let gamma = require("gamma", inputs.gamma)?;
            hypothesis(gamma > 1.0, || format!("gamma must exceed 1, got {gamma}"))?;
            finite_lower("lambda1", b.lambda1_minus, b.lambda1_plus)?;
            out.tau1 = (gamma - 1.0) * b.lambda1_minus / 2.0;
            out.tau2 = r * gamma * b.lambda1_plus;
            out.distance = DistanceKind::XBlock;
            out.envelope_c =
                8.0 * b.lambda1_plus.powi(2) * r * r * gamma * gamma / (b.lambda1_minus * (gamma - 1.0));
        }
        Variant::Variant2 => {
            let gamma = require("gamma", inputs.gamma)?;
            let l5 = require("L5", inputs.l5)?;
            finite_lower("lambda1", b.lambda1_minus, b.lambda1_plus)?;
            finite_lower("lambda2", b.lambda2_minus, b.lambda2_plus)?;
            let eta = b.lambda1_minus.min(b.lambda2_minus) / 2.0;
            hypothesis(gamma > l5 / eta, || format!("gamma must exceed L5/eta = {}, got {gamma}", l5 / eta))?;
            let lam = b.lambda1_plus.max(b.lambda2_plus);
            out.eta = Some(eta);
            out.tau1 = gamma * eta - l5;
            out.tau2 = gamma * lam * r;
            out.envelope_c = 4.0 * lam * lam * r * r * gamma * gamma / (gamma * eta - l5);
        }
        Variant::Aam => {
            let rho1 = require("rho1", inputs.rho1)?;
            let rho2 = require("rho2", inputs.rho2)?;
            hypothesis(rho1 > 0.0 && rho1 <= rho2 && rho2.is_finite(), || {
                format!("need 0 < rho1 <= rho2 < inf, got rho1={rho1}, rho2={rho2}")
            })?;
            hypothesis(b.lambda4_plus >= 0.0 && b.lambda4_plus.is_finite(), || {
                format!("lambda4_plus must be finite, got {}", b.lambda4_plus)
            })?;
            out.tau1 = rho1 / 2.0;
            out.tau2 = r * (b.lambda4_plus + rho2);
            out.envelope_c = 8.0 * r * r * (rho2 + b.lambda4_plus).powi(2) / rho1;
        }
        Variant::Palm => {
            let gamma = require("gamma", inputs.gamma)?;
            hypothesis(gamma > 1.0, || format!("gamma must exceed 1, got {gamma}"))?;
            finite_lower("lambda1", b.lambda1_minus, b.lambda1_plus)?;
            finite_lower("lambda2", b.lambda2_minus, b.lambda2_plus)?;
            hypothesis(b.lambda3_plus >= 0.0 && b.lambda3_plus.is_finite(), || {
                format!("lambda3_plus must be finite, got {}", b.lambda3_plus)
            })?;
            let lam_min = b.lambda1_minus.min(b.lambda2_minus);
            let lam_max = b.lambda1_plus.max(b.lambda2_plus);
            let inner = b.lambda3_plus + gamma * lam_max;
            out.tau1 = (gamma - 1.0) * lam_min / 2.0;
            out.tau2 = r * inner;
            out.envelope_c = 8.0 * r * r * inner * inner / (lam_min * (gamma - 1.0));
        }
    }
    out.alpha = (out.tau2 > 0.0).then(|| out.tau1 / (out.tau2 * out.tau2));
    Ok(out)
}

/// Constants for a run of `policy`: declared bounds when the problem has
/// them, otherwise the tightest bounds observed along `trace`.
pub fn constants_for_run(
    problem: &SeparableProblem,
    trace: &IterationTrace,
    policy: &StepSizePolicy,
    radius: RadiusEstimate,
) -> Result<TheoremConstants> {
    let bounds = match problem.bounds {
        Some(b) => b,
        None => LipschitzBounds::observe(problem, &trace.iterates())?,
    };
    let inputs = TheoremInputs {
        gamma: policy.gamma(),
        rho1: policy.schedule().map(|s| s.rho1()),
        rho2: policy.schedule().map(|s| s.rho2()),
        l5: problem.lip_l5,
    };
    compose_constants(policy.variant(), &bounds, &inputs, radius)
}
