use std::time::Instant;

use altmin::apps::build_composite_auxiliary;
use altmin::certify::{
    certify, check_property_a, check_property_b, check_theorem_envelope, constants_for_run, estimate_radius,
    RadiusEstimate,
};
use altmin::families::{default_composite_instance, scalar_problem, sparse_nonneg_problem, with_reference_optimum};
use altmin::solvers::{variant2_gamma_threshold, AamSchedule};
use altmin::{solve, BlockVector, SeparableProblem, SolveConfig, StepSizePolicy, Vector};

fn certified_policies(problem: &SeparableProblem) -> Vec<StepSizePolicy> {
    vec![
        StepSizePolicy::Variant1 { gamma: 2.0 },
        StepSizePolicy::Variant2 { gamma: 1.01 * variant2_gamma_threshold(problem).unwrap() },
        StepSizePolicy::Aam(AamSchedule::Constant { c: 1.0, d: 1.0 }),
        StepSizePolicy::Palm { gamma: 2.0 },
    ]
}

#[test]
fn composite_runs_have_sufficient_decrease() {
    let p = build_composite_auxiliary(&default_composite_instance(2024)).unwrap();
    let z0 = BlockVector::new(Vector::from_element(20, 1.0), Vector::zeros(15));
    let started = Instant::now();
    for policy in certified_policies(&p) {
        let t = solve(&p, &z0, &policy, &SolveConfig::default().with_max_iterations(500)).unwrap();
        assert!(t.is_monotone(1e-12), "{}", policy.variant());
        let c = constants_for_run(&p, &t, &policy, RadiusEstimate::unknown()).unwrap();
        let a = check_property_a(&t, &p, &c).unwrap();
        assert!(a.all_pass(), "{} fails at {:?}", policy.variant(), a.first_violation());
        let cert = certify(&t, &p, &c).unwrap();
        assert!(cert.overall, "{}: {:?}", policy.variant(), cert.first_violation);
    }
    eprintln!("composite certification took {:?}", started.elapsed());
}

#[test]
fn scalar_runs_satisfy_distance_bound_and_envelope() {
    let p = scalar_problem();
    let z0 = BlockVector::from_slices(&[0.0], &[1.0]);
    for policy in certified_policies(&p) {
        let t = solve(&p, &z0, &policy, &SolveConfig::default().with_max_iterations(1000)).unwrap();
        let r = estimate_radius(&p, &z0, &t.iterates(), 0, 0).unwrap();
        let c = constants_for_run(&p, &t, &policy, r).unwrap();
        assert!(check_property_b(&t, &p, &c).unwrap().all_pass(), "{}", policy.variant());
        assert!(check_theorem_envelope(&t, &p, &c).unwrap().all_pass(), "{}", policy.variant());
    }
}

#[test]
fn sublinear_rate_on_non_strongly_convex_instance() {
    let z0 = BlockVector::new(Vector::from_element(4, 1.0), Vector::from_element(4, 1.0));
    let p = with_reference_optimum(sparse_nonneg_problem(4, 7).unwrap(), &z0, 100_000).unwrap();
    let psi_star = p.optimum.as_ref().unwrap().psi_star;
    for policy in certified_policies(&p) {
        let t = solve(&p, &z0, &policy, &SolveConfig::default().with_max_iterations(1000)).unwrap();
        let r = estimate_radius(&p, &z0, &t.iterates(), 2000, 11).unwrap();
        let c = constants_for_run(&p, &t, &policy, r).unwrap();
        let psi = t.psi_values();
        let sup = (2..psi.len()).map(|k| k as f64 * (psi[k] - psi_star)).fold(f64::NEG_INFINITY, f64::max);
        assert!(sup.is_finite() && sup <= c.envelope_c, "{}: {sup} vs {}", policy.variant(), c.envelope_c);
        let cert = certify(&t, &p, &c).unwrap();
        assert!(cert.overall, "{}: {:?}", policy.variant(), cert.first_violation);
    }
}
