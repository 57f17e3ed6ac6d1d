use serde::{Deserialize, Serialize};

use crate::certify::checks::{
    certificate_tolerance, check_lemma4_envelope, envelope_bound, lower, psi_sequence, step_distances, upper,
    Lemma4Report,
};
use crate::certify::constants::{RadiusSource, TheoremConstants};
use crate::certify::hypotheses::{check_hypotheses, check_radius_cover, check_start_optimality, HypothesisCheck};
use crate::error::{Error, Result};
use crate::problem::{BoundViolation, SeparableProblem};
use crate::solvers::{IterationTrace, Variant};

/// Checks at iteration `k`: properties (a) and (b) for the step `k → k+1`,
/// and the envelope at `z^k` for `k ≥ 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateRecord {
    pub k: usize,
    pub psi: f64,
    pub gap: Option<f64>,
    pub decrease_lhs: Option<f64>,
    pub decrease_rhs: Option<f64>,
    pub pass_a: Option<bool>,
    pub bound_lhs: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub pass_b: Option<bool>,
    pub envelope_rhs: Option<f64>,
    pub pass_env: Option<bool>,
    pub marginal: bool,
}

impl CertificateRecord {
    pub fn passes(&self) -> bool {
        [self.pass_a, self.pass_b, self.pass_env].iter().all(|p| p.unwrap_or(true))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Violation {
    pub k: usize,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCertificate {
    pub variant: Variant,
    pub constants: TheoremConstants,
    pub tolerance: f64,
    pub psi_star: Option<f64>,
    pub records: Vec<CertificateRecord>,
    pub hypothesis_failures: Vec<HypothesisCheck>,
    pub hypothesis_checks: usize,
    pub bound_violations: Vec<BoundViolation>,
    pub lemma4: Option<Lemma4Report>,
    pub marginal_count: usize,
    pub overall: bool,
    pub first_violation: Option<Violation>,
    pub notes: Vec<String>,
}

const PROPERTY_A: &str = "sufficient decrease: psi(z^k) - psi(z^{k+1}) >= tau1 d^2";
const PROPERTY_B: &str = "distance bound: psi(z^{k+1}) - psi* <= tau2 d";
const ENVELOPE: &str = "rate envelope: psi(z^k) - psi* <= max{2^{-(k-1)/2} (psi(z^0) - psi*), C/(k-1)}";

/// Runs every applicable check on `trace` and assembles the verdict.
///
/// Without a known optimum only property (a) and the hypothesis checks are
/// evaluated; the record fields for (b) and the envelope stay empty.
pub fn certify(
    trace: &IterationTrace,
    problem: &SeparableProblem,
    constants: &TheoremConstants,
) -> Result<RateCertificate> {
    if trace.variant != constants.variant {
        return Err(Error::InvalidArgument(format!(
            "constants are for {} but the trace was produced by {}",
            constants.variant, trace.variant
        )));
    }
    let psi = psi_sequence(trace, problem)?;
    let tol = certificate_tolerance(psi[0]);
    let d = step_distances(trace, constants.distance);
    let opt = problem.optimum.as_ref();
    let psi_star = opt.map(|o| o.psi_star);
    let delta0 = psi_star.map(|s| psi[0] - s);

    let mut records = Vec::with_capacity(psi.len());
    let mut first: Option<Violation> = None;
    let note_first = |k: usize, what: &str, lhs: f64, rhs: f64, first: &mut Option<Violation>| {
        if first.as_ref().is_none_or(|v| k < v.k) {
            *first = Some(Violation { k, inequality: what.into(), lhs, rhs });
        }
    };

    let mut hypotheses = check_hypotheses(trace, problem)?;
    if let Some(o) = opt {
        hypotheses.extend(check_radius_cover(trace, &o.z_star, constants.radius.value));
    }
    let mut start_note = None;
    if let Some(start) = check_start_optimality(trace, problem)? {
        let b0_fails = psi_star.is_some_and(|s| !upper(0, psi[1] - s, constants.tau2 * d[0], tol).pass);
        if !start.pass && !b0_fails {
            // only the k = 0 distance bound depends on it, and that bound held anyway
            start_note = Some(format!(
                "y^0 is not a minimizer of H(x^0,.) + g (excess {}); the distance bound at k = 0 held regardless",
                start.lhs
            ));
        } else {
            hypotheses.push(start);
        }
    }
    let hypothesis_checks = hypotheses.len();
    let hypothesis_failures: Vec<HypothesisCheck> = hypotheses.into_iter().filter(|h| !h.pass).collect();
    // hypotheses are listed ahead of the inequalities they support
    for h in &hypothesis_failures {
        note_first(h.k, &h.name, h.lhs, h.rhs, &mut first);
    }
    let bound_violations = match &problem.bounds {
        Some(b) => b.violations(problem, &trace.iterates()),
        None => Vec::new(),
    };
    for v in &bound_violations {
        note_first(v.k, &format!("declared bound {}", v.bound), v.observed, v.declared, &mut first);
    }

    for k in 0..psi.len() {
        let mut rec = CertificateRecord {
            k,
            psi: psi[k],
            gap: psi_star.map(|s| psi[k] - s),
            decrease_lhs: None,
            decrease_rhs: None,
            pass_a: None,
            bound_lhs: None,
            bound_rhs: None,
            pass_b: None,
            envelope_rhs: None,
            pass_env: None,
            marginal: false,
        };
        if k + 1 < psi.len() {
            let a = lower(k, psi[k] - psi[k + 1], constants.tau1 * d[k] * d[k], tol);
            rec.decrease_lhs = Some(a.lhs);
            rec.decrease_rhs = Some(a.rhs);
            rec.pass_a = Some(a.pass);
            rec.marginal |= a.marginal;
            if !a.pass {
                note_first(k, PROPERTY_A, a.lhs, a.rhs, &mut first);
            }
            if let Some(s) = psi_star {
                let b = upper(k, psi[k + 1] - s, constants.tau2 * d[k], tol);
                rec.bound_lhs = Some(b.lhs);
                rec.bound_rhs = Some(b.rhs);
                rec.pass_b = Some(b.pass);
                rec.marginal |= b.marginal;
                if !b.pass {
                    note_first(k, PROPERTY_B, b.lhs, b.rhs, &mut first);
                }
            }
        }
        if let (Some(s), Some(d0)) = (psi_star, delta0) {
            if k >= 2 {
                let e = upper(k, psi[k] - s, envelope_bound(k, d0, constants.envelope_c), tol);
                rec.envelope_rhs = Some(e.rhs);
                rec.pass_env = Some(e.pass);
                rec.marginal |= e.marginal;
                if !e.pass {
                    note_first(k, ENVELOPE, e.lhs, e.rhs, &mut first);
                }
            }
        }
        records.push(rec);
    }

    let lemma4 = match (psi_star, constants.alpha) {
        (Some(s), Some(alpha)) if alpha > 0.0 => {
            let gaps: Vec<f64> = psi.iter().map(|p| (p - s).max(0.0)).collect();
            Some(check_lemma4_envelope(&gaps, alpha, 1e-9 * psi[0].abs().max(1.0))?)
        }
        _ => None,
    };

    let provenance = match constants.radius.source {
        RadiusSource::Analytic => "analytic",
        RadiusSource::Sampled => "sampled surrogate, a lower estimate of the true radius",
        RadiusSource::Unknown => "unknown",
    };
    let mut notes = vec![format!(
        "radius R = {} ({provenance}) is measured on the level set {{psi <= psi(z^0)}}; read literally as {{psi <= psi*}} the set would be the optimal set itself",
        constants.radius.value,
    )];
    if trace.variant == Variant::Palm {
        if let Some(l2) = &problem.lip_l2 {
            let drift = trace
                .records
                .windows(2)
                .map(|w| (l2(&w[1].z.x) - l2(&w[0].z.x)).abs())
                .fold(0.0, f64::max);
            notes.push(format!(
                "PALM steps use d_k = gamma*L2(x^{{k+1}}) while the sufficient-decrease constant uses the lower bound on L2(x^k); both are covered by lambda2 in [{}, {}], max |L2(x^{{k+1}}) - L2(x^k)| = {}",
                constants.bounds.lambda2_minus, constants.bounds.lambda2_plus, drift
            ));
        }
    }
    notes.extend(start_note);
    if psi_star.is_none() {
        notes.push("optimal value unknown: only sufficient decrease and hypotheses were checked".into());
    }
    if constants.alpha.is_none() && psi_star.is_some() {
        notes.push("tau2 = 0 (R = 0): the distance bound forces psi(z^{k+1}) = psi*".into());
    }

    let marginal_count = records.iter().filter(|r| r.marginal).count();
    let overall = records.iter().all(CertificateRecord::passes)
        && hypothesis_failures.is_empty()
        && bound_violations.is_empty();
    Ok(RateCertificate {
        variant: trace.variant,
        constants: constants.clone(),
        tolerance: tol,
        psi_star,
        records,
        hypothesis_failures,
        hypothesis_checks,
        bound_violations,
        lemma4,
        marginal_count,
        overall,
        first_violation: first,
        notes,
    })
}
