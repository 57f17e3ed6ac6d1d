use serde::{Deserialize, Serialize};

use crate::certify::constants::{DistanceKind, TheoremConstants};
use crate::error::{Error, Result};
use crate::problem::SeparableProblem;
use crate::solvers::IterationTrace;

/// Slack on every certificate inequality.
pub fn certificate_tolerance(psi0: f64) -> f64 {
    1e-10 * psi0.abs().max(1.0)
}

/// One instance of `lhs ≥ rhs` (or `≤`, per the check) at iteration `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Passed, but only by using more than a tenth of the slack.
    pub marginal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<InequalityCheck>,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.checks.iter().find(|c| !c.pass).map(|c| c.k)
    }

    pub fn marginal_count(&self) -> usize {
        self.checks.iter().filter(|c| c.marginal).count()
    }
}

/// `lhs ≤ rhs + tol`.
pub(crate) fn upper(k: usize, lhs: f64, rhs: f64, tol: f64) -> InequalityCheck {
    let excess = lhs - rhs;
    let pass = excess <= tol;
    InequalityCheck { k, lhs, rhs, pass, marginal: pass && excess > 0.1 * tol }
}

/// `lhs ≥ rhs − tol`.
pub(crate) fn lower(k: usize, lhs: f64, rhs: f64, tol: f64) -> InequalityCheck {
    let shortfall = rhs - lhs;
    let pass = shortfall <= tol;
    InequalityCheck { k, lhs, rhs, pass, marginal: pass && shortfall > 0.1 * tol }
}

/// Objective values along the trace, recomputed from the problem and
/// cross-checked against the recorded ones.
pub(crate) fn psi_sequence(trace: &IterationTrace, problem: &SeparableProblem) -> Result<Vec<f64>> {
    if trace.len() < 2 {
        return Err(Error::InvalidArgument(format!("trace needs at least 2 records, has {}", trace.len())));
    }
    let mut out = Vec::with_capacity(trace.len());
    for r in &trace.records {
        let psi = problem.psi(&r.z)?;
        if !(psi == r.psi || (psi - r.psi).abs() <= 1e-12 * psi.abs().max(1.0)) {
            return Err(Error::InvalidArgument(format!(
                "trace does not belong to problem '{}': psi at k={} is {} but recorded {}",
                problem.name, r.k, psi, r.psi
            )));
        }
        out.push(psi);
    }
    Ok(out)
}

fn check_variant(trace: &IterationTrace, constants: &TheoremConstants) -> Result<()> {
    if trace.variant != constants.variant {
        return Err(Error::InvalidArgument(format!(
            "constants are for {} but the trace was produced by {}",
            constants.variant, trace.variant
        )));
    }
    Ok(())
}

/// `d(z^k, z^{k+1})` per the constants' distance kind.
pub(crate) fn step_distances(trace: &IterationTrace, kind: DistanceKind) -> Vec<f64> {
    trace
        .records
        .windows(2)
        .map(|w| match kind {
            DistanceKind::XBlock => (&w[1].z.x - &w[0].z.x).norm(),
            DistanceKind::FullZ => w[1].z.distance(&w[0].z),
        })
        .collect()
}

/// Sufficient decrease: `Ψ(z^k) − Ψ(z^{k+1}) ≥ τ₁·d² − tol` for every step.
pub fn check_property_a(
    trace: &IterationTrace,
    problem: &SeparableProblem,
    constants: &TheoremConstants,
) -> Result<CheckReport> {
    check_variant(trace, constants)?;
    let psi = psi_sequence(trace, problem)?;
    let tol = certificate_tolerance(psi[0]);
    let d = step_distances(trace, constants.distance);
    let checks = (0..d.len()).map(|k| lower(k, psi[k] - psi[k + 1], constants.tau1 * d[k] * d[k], tol)).collect();
    Ok(CheckReport { checks, tolerance: tol })
}

/// Distance bound: `Ψ(z^{k+1}) − Ψ* ≤ τ₂·d + tol` for every step.
pub fn check_property_b(
    trace: &IterationTrace,
    problem: &SeparableProblem,
    constants: &TheoremConstants,
) -> Result<CheckReport> {
    check_variant(trace, constants)?;
    let psi_star = problem.require_optimum()?.psi_star;
    let psi = psi_sequence(trace, problem)?;
    let tol = certificate_tolerance(psi[0]);
    let d = step_distances(trace, constants.distance);
    let checks = (0..d.len()).map(|k| upper(k, psi[k + 1] - psi_star, constants.tau2 * d[k], tol)).collect();
    Ok(CheckReport { checks, tolerance: tol })
}

/// `max{(½)^{(k−1)/2}·Δ₀, C/(k−1)}` for `k ≥ 2`.
pub fn envelope_bound(k: usize, delta0: f64, envelope_c: f64) -> f64 {
    let km1 = (k - 1) as f64;
    (0.5f64.powf(km1 / 2.0) * delta0).max(envelope_c / km1)
}

/// Rate envelope: `Ψ(z^k) − Ψ* ≤ max{(½)^{(k−1)/2}(Ψ(z⁰) − Ψ*), C/(k−1)} + tol`
/// for every `k ≥ 2`.
pub fn check_theorem_envelope(
    trace: &IterationTrace,
    problem: &SeparableProblem,
    constants: &TheoremConstants,
) -> Result<CheckReport> {
    check_variant(trace, constants)?;
    let psi_star = problem.require_optimum()?.psi_star;
    let psi = psi_sequence(trace, problem)?;
    let tol = certificate_tolerance(psi[0]);
    let delta0 = psi[0] - psi_star;
    let checks = (2..psi.len())
        .map(|k| upper(k, psi[k] - psi_star, envelope_bound(k, delta0, constants.envelope_c), tol))
        .collect();
    Ok(CheckReport { checks, tolerance: tol })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma4Failure {
    Recursion,
    Envelope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma4Violation {
    pub k: usize,
    pub kind: Lemma4Failure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma4Report {
    pub recursion_ok: bool,
    pub envelope_ok: bool,
    pub first_violation: Option<Lemma4Violation>,
}

/// Checks the hypothesis `A_k − A_{k+1} ≥ α·A_{k+1}²` for every `k` and the
/// conclusion `A_k ≤ max{(½)^{(k−1)/2}A₀, 4/(α(k−1))}` for every `k ≥ 2`.
pub fn check_lemma4_envelope(seq: &[f64], alpha: f64, slack: f64) -> Result<Lemma4Report> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    if let Some(k) = seq.iter().position(|a| !(*a >= 0.0)) {
        return Err(Error::InvalidArgument(format!("sequence entry {k} is negative or NaN: {}", seq[k])));
    }
    let mut recursion: Option<usize> = None;
    for k in 0..seq.len().saturating_sub(1) {
        let next = seq[k + 1];
        let required = if next == 0.0 { 0.0 } else { alpha * next * next };
        if seq[k] - next < required - slack {
            recursion = Some(k);
            break;
        }
    }
    let mut envelope: Option<usize> = None;
    for (k, a) in seq.iter().enumerate().skip(2) {
        if *a > envelope_bound(k, seq[0], 4.0 / alpha) + slack {
            envelope = Some(k);
            break;
        }
    }
    let first_violation = match (recursion, envelope) {
        (Some(r), Some(e)) if e < r => Some(Lemma4Violation { k: e, kind: Lemma4Failure::Envelope }),
        (Some(r), _) => Some(Lemma4Violation { k: r, kind: Lemma4Failure::Recursion }),
        (None, Some(e)) => Some(Lemma4Violation { k: e, kind: Lemma4Failure::Envelope }),
        (None, None) => None,
    };
    Ok(Lemma4Report { recursion_ok: recursion.is_none(), envelope_ok: envelope.is_none(), first_violation })
}

/// The extremal sequence with `A_k − A_{k+1} = α·A_{k+1}²`, i.e. the positive
/// root `A_{k+1} = 2A_k / (1 + sqrt(1 + 4αA_k))`.
pub fn tight_lemma4_sequence(alpha: f64, a0: f64, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(a0);
    for k in 0..steps {
        let a = out[k];
        out.push(2.0 * a / (1.0 + (1.0 + 4.0 * alpha * a).sqrt()));
    }
    out
}
