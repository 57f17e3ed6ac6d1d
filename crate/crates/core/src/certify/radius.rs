//! The level-set radius `R = max {‖z − z*‖ : Ψ(z) ≤ Ψ(z⁰)}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::certify::constants::{RadiusEstimate, RadiusSource};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::{BlockVector, SeparableProblem};

const MAX_DOUBLINGS: usize = 64;
const BISECTIONS: usize = 80;

/// Exact `R` when the problem is a strongly convex quadratic with known
/// curvature, otherwise [`sample_radius`].
pub fn estimate_radius(
    problem: &SeparableProblem,
    z0: &BlockVector,
    iterates: &[BlockVector],
    num_samples: usize,
    seed: u64,
) -> Result<RadiusEstimate> {
    let opt = problem.require_optimum()?;
    if let Some(mu) = opt.curvature.filter(|m| *m > 0.0) {
        // Ψ − Ψ* = ½(z − z*)ᵀQ(z − z*), so the farthest level-set point lies
        // along the softest eigendirection
        let gap = (problem.psi(z0)? - opt.psi_star).max(0.0);
        return Ok(RadiusEstimate { value: (2.0 * gap / mu).sqrt(), source: RadiusSource::Analytic });
    }
    sample_radius(problem, z0, iterates, num_samples, seed)
}

/// Lower surrogate for `R`: the largest distance from `z*` among the given
/// iterates and the level-set boundary points found by bisection along
/// `num_samples` seeded random rays.
pub fn sample_radius(
    problem: &SeparableProblem,
    z0: &BlockVector,
    iterates: &[BlockVector],
    num_samples: usize,
    seed: u64,
) -> Result<RadiusEstimate> {
    let opt = problem.require_optimum()?;
    let level = problem.psi(z0)?;
    if !level.is_finite() {
        return Err(Error::InvalidArgument("z0 lies outside the domain".into()));
    }
    let star = &opt.z_star;
    let mut best = star.distance(z0);
    for z in iterates {
        best = best.max(star.distance(z));
    }

    let (n1, n2) = (problem.n1, problem.n2);
    let inside = |t: f64, dir: &Vector| -> Result<bool> {
        let z = BlockVector::split(&(star.stacked() + dir * t), n1);
        Ok(problem.psi(&z)? <= level)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = best.max(1e-3);
    for _ in 0..num_samples {
        let mut dir = Vector::from_fn(n1 + n2, |_, _| StandardNormal.sample(&mut rng));
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        dir /= norm;
        let (mut lo, mut hi) = (0.0, start);
        let mut doublings = 0;
        while inside(hi, &dir)? {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::EstimationFailure(
                    "level set {psi <= psi(z0)} appears unbounded along a sampled direction".into(),
                ));
            }
        }
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if inside(mid, &dir)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.max(lo);
    }
    Ok(RadiusEstimate { value: best, source: RadiusSource::Sampled })
}
