//! Turns a [`RunConfig`] into a problem, a start point and a policy.

use std::path::Path;
use std::sync::Arc;

use altmin::apps::{build_composite_auxiliary, build_sum_of_norms_auxiliary, CompositeInstance, NormBlock, SmoothTerm, SumOfNormsInstance};
use altmin::families::{gaussian_matrix, scalar_instance, sparse_nonneg_problem};
use altmin::problem::BlockLipschitz;
use altmin::prox::{ConvexSet, ProxOperator, Regularizer};
use altmin::solvers::{solve, AamSchedule, ForwardBackwardProblem, SolveConfig, StepSizePolicy};
use altmin::{BlockVector, LipschitzBounds, Matrix, Optimum, SeparableProblem, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ConfigErrors, LipschitzSpec, ProblemSpec, RunConfig};

pub struct Built {
    pub problem: SeparableProblem,
    pub composite: Option<CompositeInstance>,
    pub sum_of_norms: Option<SumOfNormsInstance>,
    pub forward_backward: Option<ForwardBackwardProblem>,
    /// Where the optimum came from, if one is attached.
    pub optimum_source: Option<String>,
}

impl Built {
    pub fn dims(&self) -> (usize, usize) {
        (self.problem.n1, self.problem.n2)
    }

    /// `[start]` values, falling back to `x = 0` and, for sum-of-norms, the
    /// exact `y` at that `x` (zero elsewhere).
    pub fn start(&self, cfg: &RunConfig) -> BlockVector {
        let (n1, n2) = self.dims();
        let x = cfg.start.x.as_ref().map_or_else(|| Vector::zeros(n1), |v| Vector::from_column_slice(v));
        let y = match (&cfg.start.y, &self.sum_of_norms) {
            (Some(v), _) => Vector::from_column_slice(v),
            (None, Some(inst)) => inst.smoothed_norms(&x),
            (None, None) => Vector::zeros(n2),
        };
        BlockVector::new(x, y)
    }
}

fn single(msg: impl Into<String>) -> ConfigErrors {
    ConfigErrors(vec![msg.into()])
}

/// Builds the instance. With `with_reference`, families without a closed
/// form optimum get one from a long run when `reference_iterations > 0`.
pub fn build(cfg: &RunConfig, with_reference: bool) -> Result<Built, ConfigErrors> {
    let spec = &cfg.problem;
    let mut built = match spec.family.as_str() {
        "scalar" => composite_built(scalar_instance(), "scalar")?,
        "composite" => composite_built(composite_instance(spec)?, "composite")?,
        "sparse-nonneg" => Built {
            problem: sparse_nonneg_problem(spec.n, spec.seed).map_err(|e| single(format!("problem: {e}")))?,
            composite: None,
            sum_of_norms: None,
            forward_backward: None,
            optimum_source: None,
        },
        "sum-of-norms" => {
            let inst = sum_of_norms_instance(spec)?;
            Built {
                problem: build_sum_of_norms_auxiliary(&inst).map_err(|e| single(format!("problem: {e}")))?,
                forward_backward: Some(inst.smoothed_forward_backward()),
                composite: None,
                sum_of_norms: Some(inst),
                optimum_source: None,
            }
        }
        other => return Err(single(format!("problem.family: unknown family '{other}'"))),
    };
    built.problem = apply_lipschitz(built.problem, &cfg.lipschitz);
    if built.problem.optimum.is_some() {
        built.optimum_source = Some("closed form".into());
    } else if with_reference && spec.reference_iterations > 0 {
        let z0 = built.start(cfg);
        let (opt, how) = reference_optimum(&built.problem, &z0, spec.reference_iterations)
            .map_err(|e| single(format!("problem.reference_iterations: reference run failed: {e}")))?;
        built.problem.optimum = Some(opt);
        built.optimum_source = Some(how);
    }
    Ok(built)
}

fn composite_built(inst: CompositeInstance, name: &str) -> Result<Built, ConfigErrors> {
    let mut problem = build_composite_auxiliary(&inst).map_err(|e| single(format!("problem: {e}")))?;
    problem.name = name.into();
    let forward_backward = match &inst.g {
        Regularizer::Quadratic { weight, center } => Some(composite_forward_backward(&inst, *weight, center)),
        _ => None,
    };
    Ok(Built { problem, composite: Some(inst), sum_of_norms: None, forward_backward, optimum_source: None })
}

/// `min f(x) + (w/2)‖Ax − b‖²` with the quadratic as the smooth part.
fn composite_forward_backward(inst: &CompositeInstance, w: f64, b: &Vector) -> ForwardBackwardProblem {
    let (a1, b1) = (inst.a.clone(), b.clone());
    let (a2, b2) = (inst.a.clone(), b.clone());
    let (f1, f2) = (inst.f.clone(), inst.f.clone());
    ForwardBackwardProblem {
        smooth_value: Arc::new(move |x: &Vector| 0.5 * w * (&a1 * x - &b1).norm_squared()),
        smooth_grad: Arc::new(move |x: &Vector| a2.tr_mul(&(&a2 * x - &b2)) * w),
        nonsmooth_value: Arc::new(move |x: &Vector| f1.value(x)),
        prox: Arc::new(move |t: f64, x: &Vector| f2.prox(t, x)),
        smooth_lipschitz: Some(w * inst.spectral_bound),
    }
}

fn regularizer(kind: &str, weight: f64, center: Vector, spec: &ProblemSpec) -> Regularizer {
    let dim = center.len();
    match kind {
        "zero" => Regularizer::Zero,
        "l1" => Regularizer::L1 { lambda: weight },
        "quadratic" => Regularizer::Quadratic { weight, center },
        "nonneg" => Regularizer::Indicator(ConvexSet::LowerBound(0.0)),
        _ => Regularizer::Indicator(ConvexSet::Box {
            lower: Vector::from_element(dim, spec.lower),
            upper: Vector::from_element(dim, spec.upper),
        }),
    }
}

fn composite_instance(spec: &ProblemSpec) -> Result<CompositeInstance, ConfigErrors> {
    let mut errors = Vec::new();
    // same draw order as the seeded composite family: A, then b
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let generated = gaussian_matrix(spec.rows, spec.cols, &mut rng);
    let a = match &spec.matrix {
        Some(path) => match read_matrix(path) {
            Ok(m) => m,
            Err(e) => {
                errors.push(e);
                generated
            }
        },
        None => generated,
    };
    let generated_b = Vector::from_fn(a.nrows(), |_, _| StandardNormal.sample(&mut rng));
    let b = match &spec.vector {
        Some(path) => match read_vector(path) {
            Ok(v) if v.len() == a.nrows() => v,
            Ok(v) => {
                errors.push(format!("problem.vector: {} has {} entries, A has {} rows", path.display(), v.len(), a.nrows()));
                generated_b
            }
            Err(e) => {
                errors.push(e);
                generated_b
            }
        },
        None => generated_b,
    };
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let f = regularizer(&spec.f, spec.f_weight, Vector::zeros(a.ncols()), spec);
    let g = regularizer(&spec.g, spec.g_weight, b, spec);
    let inst = CompositeInstance::new(a, spec.rho, f, g).map_err(|e| single(format!("problem: {e}")))?;
    Ok(match spec.inner_max_iter {
        Some(n) => inst.with_inner_max_iter(n),
        None => inst,
    })
}

/// `½‖Cx − d‖² + Σᵢ ‖Aᵢx + bᵢ‖` with Gaussian data.
fn sum_of_norms_instance(spec: &ProblemSpec) -> Result<SumOfNormsInstance, ConfigErrors> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let c = gaussian_matrix(n, n, &mut rng);
    let d = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let blocks = (0..spec.blocks)
        .map(|_| {
            let a = gaussian_matrix(spec.block_rows, n, &mut rng);
            let b = Vector::from_fn(spec.block_rows, |_, _| StandardNormal.sample(&mut rng));
            NormBlock { a, b }
        })
        .collect();
    let domain = match spec.domain.as_str() {
        "box" => ConvexSet::Box { lower: Vector::from_element(n, spec.lower), upper: Vector::from_element(n, spec.upper) },
        _ => ConvexSet::Whole,
    };
    SumOfNormsInstance::new(n, SmoothTerm::LeastSquares { c, d }, blocks, domain, spec.epsilon)
        .map_err(|e| single(format!("problem: {e}")))
}

fn scaled(oracle: Option<BlockLipschitz>, s: f64) -> Option<BlockLipschitz> {
    if s == 1.0 {
        return oracle;
    }
    oracle.map(|o| Arc::new(move |v: &Vector| s * o(v)) as BlockLipschitz)
}

fn constant(v: Option<f64>, s: f64) -> Option<BlockLipschitz> {
    v.map(|v| {
        let c = v * s;
        Arc::new(move |_: &Vector| c) as BlockLipschitz
    })
}

fn apply_lipschitz(mut p: SeparableProblem, spec: &LipschitzSpec) -> SeparableProblem {
    let s = [spec.l1_scale, spec.l2_scale, spec.l3_scale, spec.l4_scale, spec.l5_scale];
    if spec.source == "declared" {
        p.lip_l1 = constant(spec.l1, s[0]);
        p.lip_l2 = constant(spec.l2, s[1]);
        p.lip_l3 = constant(spec.l3, s[2]);
        p.lip_l4 = constant(spec.l4, s[3]);
        p.lip_l5 = spec.l5.map(|v| v * s[4]);
        p.bounds = match (spec.l1, spec.l2, spec.l3, spec.l4) {
            (Some(a), Some(b), Some(c), Some(d)) => Some(LipschitzBounds::constant(a * s[0], b * s[1], c * s[2], d * s[3])),
            _ => None,
        };
        return p;
    }
    p.lip_l1 = scaled(p.lip_l1.take(), s[0]);
    p.lip_l2 = scaled(p.lip_l2.take(), s[1]);
    p.lip_l3 = scaled(p.lip_l3.take(), s[2]);
    p.lip_l4 = scaled(p.lip_l4.take(), s[3]);
    p.lip_l5 = p.lip_l5.map(|v| v * s[4]);
    p.bounds = p.bounds.map(|b| LipschitzBounds {
        lambda1_minus: b.lambda1_minus * s[0],
        lambda1_plus: b.lambda1_plus * s[0],
        lambda2_minus: b.lambda2_minus * s[1],
        lambda2_plus: b.lambda2_plus * s[1],
        lambda3_plus: b.lambda3_plus * s[2],
        lambda4_plus: b.lambda4_plus * s[3],
    });
    p
}

/// Best iterate of a long run: exact minimization when both block
/// minimizers exist, variant-I with `γ = 1.01` otherwise.
fn reference_optimum(p: &SeparableProblem, z0: &BlockVector, iterations: usize) -> altmin::Result<(Optimum, String)> {
    let (policy, how) = if p.exact_argmin_x.is_some() && p.exact_argmin_y.is_some() {
        (StepSizePolicy::Exact, "am")
    } else {
        (StepSizePolicy::Variant1 { gamma: 1.01 }, "variant1")
    };
    let trace = solve(p, z0, &policy, &SolveConfig::default().with_max_iterations(iterations))?;
    let best = trace
        .records
        .iter()
        .min_by(|a, b| a.psi.total_cmp(&b.psi))
        .expect("a trace holds at least z0");
    let opt = Optimum { z_star: best.z.clone(), psi_star: best.psi, curvature: None };
    Ok((opt, format!("best iterate of {} {how} iterations", trace.iterations())))
}

/// The step-size policy for the alternating schemes.
pub fn policy(cfg: &RunConfig) -> Result<StepSizePolicy, String> {
    let s = &cfg.solver;
    let gamma = || s.gamma.ok_or_else(|| format!("solver.gamma is required for {}", s.method));
    Ok(match s.method.as_str() {
        "am" => StepSizePolicy::Exact,
        "aam" => StepSizePolicy::Aam(AamSchedule::Constant { c: s.c.unwrap_or(1.0), d: s.d.unwrap_or(1.0) }),
        "palm" => StepSizePolicy::Palm { gamma: gamma()? },
        "variant1" => StepSizePolicy::Variant1 { gamma: gamma()? },
        "variant2" => StepSizePolicy::Variant2 { gamma: gamma()? },
        other => return Err(format!("'{other}' is not an alternating scheme")),
    })
}

fn read_records(path: &Path, what: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("problem.{what}: cannot read data file {}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("problem.{what}: {}: {e}", path.display()))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push(r),
            // a leading non-numeric row is a header
            Err(_) if i == 0 => {}
            Err(e) => return Err(format!("problem.{what}: {} line {}: {e}", path.display(), i + 1)),
        }
    }
    if rows.is_empty() {
        return Err(format!("problem.{what}: {} holds no numeric rows", path.display()));
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> Result<Matrix, String> {
    let rows = read_records(path, "matrix")?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("problem.matrix: {} has rows of different lengths", path.display()));
    }
    let flat: Vec<f64> = rows.concat();
    Ok(Matrix::from_row_slice(rows.len(), cols, &flat))
}

/// One value per line, or a single row.
pub fn read_vector(path: &Path) -> Result<Vector, String> {
    let rows = read_records(path, "vector")?;
    if rows.len() == 1 {
        return Ok(Vector::from_vec(rows[0].clone()));
    }
    if rows.iter().any(|r| r.len() != 1) {
        return Err(format!("problem.vector: {} must be a single row or a single column", path.display()));
    }
    Ok(Vector::from_iterator(rows.len(), rows.into_iter().map(|r| r[0])))
}
