//! The TOML run description.
//!
//! ```toml
//! [problem]
//! family = "composite"
//! rows = 15
//! cols = 20
//!
//! [solver]
//! method = "variant1"
//! max_iter = 500
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::build::{self, Built};

pub const FAMILIES: [&str; 4] = ["scalar", "composite", "sparse-nonneg", "sum-of-norms"];
pub const METHODS: [&str; 8] = ["am", "aam", "palm", "variant1", "variant2", "pfb", "irls", "irls-linearized"];
pub const REGULARIZERS: [&str; 5] = ["zero", "l1", "quadratic", "nonneg", "box"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub lipschitz: LipschitzSpec,
    pub solver: SolverSpec,
    pub start: StartSpec,
    pub output: OutputSpec,
}

/// Instance family and its parameters. Fields that a family does not use
/// are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub family: String,
    /// Seed of the instance generator.
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub rho: f64,
    /// Composite `f`.
    pub f: String,
    pub f_weight: f64,
    /// Composite `g`.
    pub g: String,
    pub g_weight: f64,
    pub lower: f64,
    pub upper: f64,
    /// CSV with the coupling matrix `A`, replacing the generated one.
    pub matrix: Option<PathBuf>,
    /// CSV with the center of a quadratic `g`, replacing the generated one.
    pub vector: Option<PathBuf>,
    /// Dimension of `x` for sparse-nonneg and sum-of-norms.
    pub n: usize,
    /// Number of norm blocks.
    pub blocks: usize,
    pub block_rows: usize,
    pub epsilon: f64,
    /// `"whole"` or `"box"` (with `lower`/`upper`) for sum-of-norms.
    pub domain: String,
    /// Iterations of the run that supplies a reference optimum when none is
    /// known in closed form; 0 disables it.
    pub reference_iterations: usize,
    /// Iteration budget of the inner solver for composite x-subproblems
    /// without a closed form.
    pub inner_max_iter: Option<usize>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            family: "composite".into(),
            seed: 2024,
            rows: 15,
            cols: 20,
            rho: 1.0,
            f: "l1".into(),
            f_weight: 0.1,
            g: "quadratic".into(),
            g_weight: 1.0,
            lower: -1.0,
            upper: 1.0,
            matrix: None,
            vector: None,
            n: 5,
            blocks: 8,
            block_rows: 3,
            epsilon: 1e-2,
            domain: "whole".into(),
            reference_iterations: 0,
            inner_max_iter: None,
        }
    }
}

/// `source = "exact"` uses the family's oracles; `"declared"` replaces
/// them with the constants `l1..l5`. The scale factors apply in both modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipschitzSpec {
    pub source: String,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    pub l4: Option<f64>,
    pub l5: Option<f64>,
    pub l1_scale: f64,
    pub l2_scale: f64,
    pub l3_scale: f64,
    pub l4_scale: f64,
    pub l5_scale: f64,
}

impl Default for LipschitzSpec {
    fn default() -> Self {
        Self {
            source: "exact".into(),
            l1: None,
            l2: None,
            l3: None,
            l4: None,
            l5: None,
            l1_scale: 1.0,
            l2_scale: 1.0,
            l3_scale: 1.0,
            l4_scale: 1.0,
            l5_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub method: String,
    /// Filled with the default for the method when absent.
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    /// Forward-backward step `t`; defaults to 1.01 times the smooth modulus.
    pub step: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub parallel: bool,
    pub seed: u64,
    pub record_timing: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            method: "variant1".into(),
            gamma: None,
            c: None,
            d: None,
            step: None,
            max_iter: 500,
            tol: 0.0,
            parallel: false,
            seed: 0,
            record_timing: false,
        }
    }
}

/// Starting point; absent blocks start at the family default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartSpec {
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub trace: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    /// Rays used by the sampled radius surrogate.
    pub radius_samples: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { trace: None, certificate: None, plot: None, radius_samples: 256 }
    }
}

/// Every problem found while reading a config.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{}", .0.join("; "))]
pub struct ConfigErrors(pub Vec<String>);

/// Parses, fills defaults that depend on the instance and validates.
/// All detected problems are returned together.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigErrors(vec![e.to_string()]))?;
    let mut errors = static_checks(&cfg);
    if errors.is_empty() {
        match build::build(&cfg, false) {
            Ok(built) => errors.extend(resolve_defaults(&mut cfg, &built)),
            Err(e) => errors.extend(e.0),
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("run config is serializable")
}

fn static_checks(cfg: &RunConfig) -> Vec<String> {
    let mut e = Vec::new();
    let p = &cfg.problem;
    let s = &cfg.solver;
    let l = &cfg.lipschitz;
    if !FAMILIES.contains(&p.family.as_str()) {
        e.push(format!("problem.family: unknown family '{}', expected one of {}", p.family, FAMILIES.join(", ")));
    }
    if !METHODS.contains(&s.method.as_str()) {
        e.push(format!("solver.method: unknown solver tag '{}', expected one of {}", s.method, METHODS.join(", ")));
    }
    if !(p.rho > 0.0) || !p.rho.is_finite() {
        e.push(format!("problem.rho must be positive, got {}", p.rho));
    }
    if !(p.epsilon > 0.0) || !p.epsilon.is_finite() {
        e.push(format!("problem.epsilon must be positive, got {}", p.epsilon));
    }
    for (name, v) in [("rows", p.rows), ("cols", p.cols), ("n", p.n), ("blocks", p.blocks), ("block_rows", p.block_rows)] {
        if v == 0 {
            e.push(format!("problem.{name} must be at least 1"));
        }
    }
    for (name, kind) in [("f", &p.f), ("g", &p.g)] {
        if !REGULARIZERS.contains(&kind.as_str()) {
            e.push(format!("problem.{name}: unknown term '{kind}', expected one of {}", REGULARIZERS.join(", ")));
        }
    }
    if !(p.f_weight >= 0.0) || !(p.g_weight >= 0.0) {
        e.push("problem.f_weight and problem.g_weight must be nonnegative".into());
    }
    if !(p.lower <= p.upper) {
        e.push(format!("problem.lower must not exceed problem.upper, got {} > {}", p.lower, p.upper));
    }
    if !["whole", "box"].contains(&p.domain.as_str()) {
        e.push(format!("problem.domain: expected 'whole' or 'box', got '{}'", p.domain));
    }
    if s.max_iter == 0 {
        e.push("solver.max_iter must be at least 1".into());
    }
    if !(s.tol >= 0.0) {
        e.push(format!("solver.tol must be nonnegative, got {}", s.tol));
    }
    if let Some(g) = s.gamma {
        if !(g > 0.0) || !g.is_finite() {
            e.push(format!("solver.gamma must be positive and finite, got {g}"));
        } else if matches!(s.method.as_str(), "variant1" | "palm" | "irls-linearized") && !(g > 1.0) {
            e.push(format!("solver.gamma must exceed 1 for {}, got {g}", s.method));
        }
    }
    for (name, v) in [("c", s.c), ("d", s.d), ("step", s.step)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                e.push(format!("solver.{name} must be positive and finite, got {v}"));
            }
        }
    }
    if !["exact", "declared"].contains(&l.source.as_str()) {
        e.push(format!("lipschitz.source: expected 'exact' or 'declared', got '{}'", l.source));
    }
    for (name, v) in [("l1", l.l1), ("l2", l.l2), ("l3", l.l3), ("l4", l.l4), ("l5", l.l5)] {
        if let Some(v) = v {
            if !(v >= 0.0) || !v.is_finite() {
                e.push(format!("lipschitz.{name} must be finite and nonnegative, got {v}"));
            }
        }
    }
    for (name, v) in [
        ("l1_scale", l.l1_scale),
        ("l2_scale", l.l2_scale),
        ("l3_scale", l.l3_scale),
        ("l4_scale", l.l4_scale),
        ("l5_scale", l.l5_scale),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            e.push(format!("lipschitz.{name} must be positive, got {v}"));
        }
    }
    if cfg.output.radius_samples == 0 {
        e.push("output.radius_samples must be at least 1".into());
    }
    e
}

/// Requirements that need the instance: oracles, moduli and defaults.
fn resolve_defaults(cfg: &mut RunConfig, built: &Built) -> Vec<String> {
    let mut e = Vec::new();
    let method = cfg.solver.method.clone();
    let family = cfg.problem.family.clone();
    let (n1, n2) = built.dims();
    if let Some(x) = &cfg.start.x {
        if x.len() != n1 {
            e.push(format!("start.x has length {}, the {family} instance needs {n1}", x.len()));
        }
    }
    if let Some(y) = &cfg.start.y {
        if y.len() != n2 {
            e.push(format!("start.y has length {}, the {family} instance needs {n2}", y.len()));
        }
    }
    if matches!(method.as_str(), "irls" | "irls-linearized") && built.sum_of_norms.is_none() {
        e.push(format!("solver.method '{method}' needs the sum-of-norms family, got '{family}'"));
    }
    if method == "pfb" && built.forward_backward.is_none() {
        e.push(format!(
            "solver.method 'pfb' needs a smooth composition: use sum-of-norms or composite with a quadratic g (family '{family}')"
        ));
    }
    let p = &built.problem;
    let missing = |what: &str, method: &str| {
        format!("solver.method '{method}' requires {what}, which the {family} instance does not provide")
    };
    match method.as_str() {
        "am" => {
            if p.exact_argmin_x.is_none() {
                e.push(missing("exact_argmin_x", &method));
            }
            if p.exact_argmin_y.is_none() {
                e.push(missing("exact_argmin_y", &method));
            }
        }
        "aam" => {
            if p.regularized_argmin_x.is_none() || p.regularized_argmin_y.is_none() {
                e.push(missing("regularized block minimizers", &method));
            }
            cfg.solver.c.get_or_insert(1.0);
            cfg.solver.d.get_or_insert(1.0);
        }
        "variant1" | "palm" => {
            if p.lip_l1.is_none() {
                e.push(missing("the Lipschitz modulus lip_L1 (declare lipschitz.l1)", &method));
            }
            if method == "palm" && p.lip_l2.is_none() {
                e.push(missing("the Lipschitz modulus lip_L2 (declare lipschitz.l2)", &method));
            }
            if method == "variant1" && p.exact_argmin_y.is_none() {
                e.push(missing("exact_argmin_y", &method));
            }
            cfg.solver.gamma.get_or_insert(1.01);
        }
        "variant2" => {
            let mut ok = true;
            for (name, present) in [("lip_L1", p.lip_l1.is_some()), ("lip_L2", p.lip_l2.is_some())] {
                if !present {
                    e.push(missing(&format!("the Lipschitz modulus {name}"), &method));
                    ok = false;
                }
            }
            if p.lip_l5.is_none() {
                e.push(missing("the missing Lipschitz requirement lip_L5 (declare lipschitz.l5)", &method));
                ok = false;
            }
            if ok {
                match altmin::solvers::variant2_gamma_threshold(p) {
                    Ok(t) => match cfg.solver.gamma {
                        Some(g) if !(g > t) => {
                            e.push(format!("solver.gamma must exceed L5/eta = {t} for variant2, got {g}"))
                        }
                        Some(_) => {}
                        None => cfg.solver.gamma = Some(1.01 * t),
                    },
                    Err(err) => e.push(format!("variant2: {err}")),
                }
            }
        }
        "irls-linearized" => {
            if cfg.solver.c.is_none() {
                cfg.solver.gamma.get_or_insert(1.01);
            }
        }
        "pfb" => {
            if let Some(fb) = &built.forward_backward {
                if cfg.solver.step.is_none() {
                    match fb.smooth_lipschitz {
                        Some(l) if l > 0.0 => cfg.solver.step = Some(1.01 * l),
                        _ => e.push("solver.step is required: the smooth term has no known modulus".into()),
                    }
                }
            }
        }
        _ => {}
    }
    if let Ok(policy) = build::policy(cfg) {
        if let Err(err) = policy.validate(p) {
            e.push(format!("solver: {err}"));
        }
    }
    e
}
