use altmin::apps::{
    build_composite_auxiliary, build_sum_of_norms_auxiliary, composite_variant1_step, irls_step, linearized_irls_step,
    NormBlock, SmoothTerm, SumOfNormsInstance,
};
use altmin::families::default_composite_instance;
use altmin::prox::ConvexSet;
use altmin::solvers::{run_am, run_pfb, run_variant1};
use altmin::{BlockVector, Matrix, SolveConfig, StepSizePolicy, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> SumOfNormsInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (5, 8);
    let c = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let d = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let blocks = (0..m)
        .map(|_| NormBlock {
            a: Matrix::from_fn(3, n, |_, _| rng.random_range(-1.0..1.0)),
            b: Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)),
        })
        .collect();
    SumOfNormsInstance::new(n, SmoothTerm::LeastSquares { c, d }, blocks, ConvexSet::Whole, 1e-2).unwrap()
}

fn max_gap(a: &[Vector], b: &[Vector]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(u, v)| (u - v).amax()).fold(0.0, f64::max)
}

#[test]
fn irls_is_alternating_minimization() {
    let inst = instance(1);
    let p = build_sum_of_norms_auxiliary(&inst).unwrap();
    let x0 = Vector::from_element(5, 0.5);
    let y0 = inst.smoothed_norms(&x0);
    let am = run_am(&p, &BlockVector::new(x0.clone(), y0), &SolveConfig::default().with_max_iterations(50)).unwrap();

    let mut xs = vec![x0.clone()];
    let (mut x, mut w) = (x0.clone(), inst.weights(&x0));
    for _ in 0..50 {
        (x, w) = irls_step(&inst, &x, &w).unwrap();
        xs.push(x.clone());
    }
    let am_x: Vec<Vector> = am.iterates().into_iter().map(|z| z.x).collect();
    assert!(max_gap(&xs, &am_x) <= 1e-10);
}

#[test]
fn linearized_irls_is_variant1_and_forward_backward() {
    let inst = instance(2);
    let p = build_sum_of_norms_auxiliary(&inst).unwrap();
    let x0 = Vector::from_element(5, -0.3);
    let gamma = 1.5;
    let cfg = SolveConfig::default().with_max_iterations(50);
    let v1 = run_variant1(&p, &BlockVector::new(x0.clone(), inst.smoothed_norms(&x0)), &StepSizePolicy::Variant1 { gamma }, &cfg)
        .unwrap();

    let mut xs = vec![x0.clone()];
    let (mut x, mut w) = (x0.clone(), inst.weights(&x0));
    for _ in 0..50 {
        let c = gamma * inst.weighted_lipschitz(&w);
        (x, w) = linearized_irls_step(&inst, &x, &w, c).unwrap();
        xs.push(x.clone());
    }
    let v1_x: Vec<Vector> = v1.iterates().into_iter().map(|z| z.x).collect();
    assert!(max_gap(&xs, &v1_x) <= 1e-10);

    let t = 1.01 * inst.smoothed_lipschitz();
    let pfb = run_pfb(&inst.smoothed_forward_backward(), &x0, t, &cfg).unwrap();
    let mut xs = vec![x0.clone()];
    let (mut x, mut w) = (x0.clone(), inst.weights(&x0));
    for _ in 0..50 {
        (x, w) = linearized_irls_step(&inst, &x, &w, t).unwrap();
        xs.push(x.clone());
    }
    assert!(max_gap(&xs, &pfb.iterates) <= 1e-10);
}

#[test]
fn composite_step_is_variant1_bitwise() {
    let inst = default_composite_instance(5);
    let p = build_composite_auxiliary(&inst).unwrap();
    let gamma = 2.0;
    let z0 = BlockVector::new(Vector::from_element(20, 0.25), Vector::from_element(15, -0.5));
    let t = run_variant1(&p, &z0, &StepSizePolicy::Variant1 { gamma }, &SolveConfig::default().with_max_iterations(100))
        .unwrap();
    let c = inst.default_step(gamma).unwrap();
    let (mut x, mut y) = (z0.x.clone(), z0.y.clone());
    for k in 1..=100 {
        (x, y) = composite_variant1_step(&inst, &x, &y, c).unwrap();
        let z = t.iterate(k);
        assert!(x.iter().zip(z.x.iter()).all(|(a, b)| a.to_bits() == b.to_bits()), "x differs at {k}");
        assert!(y.iter().zip(z.y.iter()).all(|(a, b)| a.to_bits() == b.to_bits()), "y differs at {k}");
    }
}
