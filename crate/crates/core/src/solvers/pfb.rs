use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Vector};
use crate::problem::{BlockValue, ProxMap};
use crate::solvers::{SolveConfig, StopReason};

/// `minimize smooth(x) + nonsmooth(x)` for the proximal forward-backward baseline.
#[derive(Clone)]
pub struct ForwardBackwardProblem {
    pub smooth_value: BlockValue,
    pub smooth_grad: Arc<dyn Fn(&Vector) -> Vector + Send + Sync>,
    pub nonsmooth_value: BlockValue,
    pub prox: ProxMap,
    /// Lipschitz modulus of `∇smooth`, when known.
    pub smooth_lipschitz: Option<f64>,
}

impl ForwardBackwardProblem {
    pub fn objective(&self, x: &Vector) -> f64 {
        let n = (self.nonsmooth_value)(x);
        if n == f64::INFINITY {
            return n;
        }
        (self.smooth_value)(x) + n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PfbTrace {
    pub iterates: Vec<Vector>,
    pub objective: Vec<f64>,
    pub stop_reason: StopReason,
}

/// `x^{k+1} = prox_t(x^k − ∇smooth(x^k)/t)` with a fixed parameter `t`.
pub fn run_pfb(problem: &ForwardBackwardProblem, x0: &Vector, t: f64, config: &SolveConfig) -> Result<PfbTrace> {
    config.validate()?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("step parameter t must be positive, got {t}")));
    }
    if let Some(l) = problem.smooth_lipschitz {
        if !(t > l) {
            return Err(Error::InvalidPolicy(format!("t must exceed the smooth modulus {l}, got {t}")));
        }
    }
    let mut iterates = vec![x0.clone()];
    let mut objective = vec![problem.objective(x0)];
    let mut stop_reason = StopReason::MaxIterations;
    for _ in 0..config.max_iterations {
        let x = iterates.last().unwrap();
        let grad = (problem.smooth_grad)(x);
        let point = x - grad / t;
        let next = (problem.prox)(t, &point);
        if !all_finite(&next) {
            return Err(Error::OracleContract("forward-backward iterate became non-finite".into()));
        }
        let step = (&next - x).norm();
        objective.push(problem.objective(&next));
        iterates.push(next);
        if step <= config.stop_tolerance {
            stop_reason = StopReason::StepTolerance;
            break;
        }
    }
    Ok(PfbTrace { iterates, objective, stop_reason })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_square() -> ForwardBackwardProblem {
        ForwardBackwardProblem {
            smooth_value: Arc::new(|x: &Vector| 0.5 * x.norm_squared()),
            smooth_grad: Arc::new(|x: &Vector| x.clone()),
            nonsmooth_value: Arc::new(|_: &Vector| 0.0),
            prox: Arc::new(|_t, p: &Vector| p.clone()),
            smooth_lipschitz: Some(1.0),
        }
    }

    #[test]
    fn explicit_gradient_step() {
        let tr = run_pfb(&half_square(), &Vector::from_element(1, 1.0), 2.0, &SolveConfig::default().with_max_iterations(1)).unwrap();
        assert_eq!(tr.iterates[1][0], 0.5);
    }

    #[test]
    fn stationary_point_is_fixed() {
        let cfg = SolveConfig::default().with_max_iterations(5);
        let tr = run_pfb(&half_square(), &Vector::zeros(2), 2.0, &cfg).unwrap();
        assert_eq!(tr.stop_reason, StopReason::StepTolerance);
        assert_eq!(tr.iterates[1], Vector::zeros(2));
    }

    #[test]
    fn parameter_checks() {
        let cfg = SolveConfig::default();
        let p = half_square();
        assert!(matches!(run_pfb(&p, &Vector::zeros(1), 0.0, &cfg), Err(Error::InvalidArgument(_))));
        assert!(matches!(run_pfb(&p, &Vector::zeros(1), 0.5, &cfg), Err(Error::InvalidPolicy(_))));
    }
}
