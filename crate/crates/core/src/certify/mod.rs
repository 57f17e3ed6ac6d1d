//! Per-iteration verification of the convergence argument.
//!
//! For a run of a certified scheme the checks are
//!
//! * (a) `Ψ(z^k) − Ψ(z^{k+1}) ≥ τ₁·d(z^k, z^{k+1})²`,
//! * (b) `Ψ(z^{k+1}) − Ψ* ≤ τ₂·d(z^k, z^{k+1})`,
//! * the envelope `Ψ(z^k) − Ψ* ≤ max{(½)^{(k−1)/2}(Ψ(z⁰) − Ψ*), C/(k−1)}`,
//!
//! where (a) and (b) together give `A_k − A_{k+1} ≥ α·A_{k+1}²` for the gaps
//! `A_k`, with `α = τ₁/τ₂²` and `C = 4/α`. The moduli hypotheses behind τ₁
//! are rechecked on the visited points.

mod certificate;
mod checks;
mod constants;
mod hypotheses;
mod radius;

pub use certificate::{certify, CertificateRecord, RateCertificate, Violation};
pub use checks::{
    certificate_tolerance, check_lemma4_envelope, check_property_a, check_property_b, check_theorem_envelope,
    envelope_bound, tight_lemma4_sequence, CheckReport, InequalityCheck, Lemma4Failure, Lemma4Report,
    Lemma4Violation,
};
pub use constants::{
    compose_constants, constants_for_run, DistanceKind, RadiusEstimate, RadiusSource, TheoremConstants,
    TheoremInputs,
};
pub use hypotheses::{check_hypotheses, check_radius_cover, check_start_optimality, HypothesisCheck};
pub use radius::{estimate_radius, sample_radius};
