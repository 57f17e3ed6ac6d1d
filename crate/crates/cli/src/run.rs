//! Runs a config and writes the trace, certificate and plot files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use altmin::apps::{irls_step, linearized_irls_step};
use altmin::certify::{certify, constants_for_run, estimate_radius, RadiusEstimate, RateCertificate};
use altmin::solvers::{run_pfb, solve, IterationTrace, SolveConfig, StopReason};
use altmin::{BlockVector, Error, Vector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::build::{self, Built};
use crate::config::{emit_config, ConfigErrors, RunConfig};

pub const SCHEMA: &str = "altmin-certificate/1";
pub const TRACE_HEADER: [&str; 9] = ["k", "psi", "gap", "dx_norm", "dy_norm", "dz_norm", "c_k", "d_k", "wall_time_s"];
pub const PLOT_HEADER: [&str; 3] = ["k", "k_gap", "envelope"];

pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const ORACLE: i32 = 3;
    pub const STRICT: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(ConfigErrors),
    #[error("oracle contract violation: {0}")]
    Oracle(String),
    #[error("certificate violation: {0}")]
    Strict(String),
    #[error("cannot write {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Oracle(_) => exit::ORACLE,
            CliError::Strict(_) => exit::STRICT,
            CliError::Io { .. } => exit::IO,
        }
    }
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e)
    }
}

fn from_core(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(_) | Error::InvalidPolicy(_) | Error::MissingRequirement(_) => {
            CliError::Config(ConfigErrors(vec![e.to_string()]))
        }
        other => CliError::Oracle(other.to_string()),
    }
}

/// One line of the trace CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub psi: f64,
    pub gap: Option<f64>,
    pub dx_norm: Option<f64>,
    pub dy_norm: Option<f64>,
    pub dz_norm: Option<f64>,
    pub c_k: Option<f64>,
    pub d_k: Option<f64>,
    pub wall_time_s: Option<f64>,
}

/// The JSON written to the certificate path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub schema: String,
    pub family: String,
    pub method: String,
    pub problem: String,
    pub seed: u64,
    pub instance_seed: u64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub psi_star: Option<f64>,
    pub optimum_source: Option<String>,
    pub trace_file: Option<String>,
    pub trace_sha256: String,
    /// The resolved config, as TOML.
    pub config: String,
    pub certificate: Option<RateCertificate>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct Outputs {
    pub trace: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

pub struct RunOutcome {
    pub rows: Vec<TraceRow>,
    pub trace_csv: String,
    pub document: CertificateDocument,
    pub trace: Option<IterationTrace>,
}

impl RunOutcome {
    pub fn certificate(&self) -> Option<&RateCertificate> {
        self.document.certificate.as_ref()
    }
}

fn solve_config(cfg: &RunConfig) -> SolveConfig {
    SolveConfig {
        max_iterations: cfg.solver.max_iter,
        stop_tolerance: cfg.solver.tol,
        seed: cfg.solver.seed,
        parallel_blocks: cfg.solver.parallel,
        record_wall_time: cfg.solver.record_timing,
        ..SolveConfig::default()
    }
}

/// Runs the configured method; nothing is written.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    let built = build::build(cfg, true)?;
    let z0 = built.start(cfg);
    let psi_star = built.problem.optimum.as_ref().map(|o| o.psi_star);
    let mut notes = Vec::new();
    let sc = solve_config(cfg);
    let (rows, stop_reason, trace, certificate) = match cfg.solver.method.as_str() {
        "irls" | "irls-linearized" => {
            let (rows, stop) = run_irls(cfg, &built, &z0, &sc)?;
            notes.push(format!(
                "{} is the {} scheme on the auxiliary problem; psi is the smoothed objective",
                cfg.solver.method,
                if cfg.solver.method == "irls" { "am" } else { "variant1" }
            ));
            (rows, stop, None, None)
        }
        "pfb" => {
            let fb = built.forward_backward.as_ref().expect("checked at parse time");
            let t = cfg.solver.step.expect("filled at parse time");
            let out = run_pfb(fb, &z0.x, t, &sc).map_err(from_core)?;
            let rows = out
                .objective
                .iter()
                .enumerate()
                .map(|(k, psi)| TraceRow {
                    k,
                    psi: *psi,
                    gap: None,
                    dx_norm: (k + 1 < out.iterates.len()).then(|| (&out.iterates[k + 1] - &out.iterates[k]).norm()),
                    dy_norm: None,
                    dz_norm: None,
                    c_k: Some(t),
                    d_k: None,
                    wall_time_s: None,
                })
                .collect();
            notes.push("forward-backward runs on the original objective in x alone; no gap or certificate".into());
            (rows, out.stop_reason, None, None)
        }
        _ => {
            let policy = build::policy(cfg).map_err(|e| CliError::Config(ConfigErrors(vec![e])))?;
            let trace = solve(&built.problem, &z0, &policy, &sc).map_err(from_core)?;
            let rows = trace_rows(&trace, psi_star);
            let cert = if policy.variant().is_certified() {
                certificate_for(cfg, &built, &trace, &policy, &z0, &mut notes)?
            } else {
                notes.push("plain alternating minimization carries no rate certificate".into());
                None
            };
            let stop = trace.stop_reason;
            (rows, stop, Some(trace), cert)
        }
    };
    if psi_star.is_none() && certificate.is_none() && built.forward_backward.is_none() {
        notes.push("no optimum is known for this instance; set problem.reference_iterations for gaps".into());
    }
    let trace_csv = render_trace(&rows);
    let document = CertificateDocument {
        schema: SCHEMA.into(),
        family: cfg.problem.family.clone(),
        method: cfg.solver.method.clone(),
        problem: built.problem.name.clone(),
        seed: cfg.solver.seed,
        instance_seed: cfg.problem.seed,
        iterations: rows.len().saturating_sub(1),
        stop_reason,
        psi_star: if cfg.solver.method == "pfb" { None } else { psi_star },
        optimum_source: built.optimum_source.clone(),
        trace_file: None,
        trace_sha256: sha256_hex(trace_csv.as_bytes()),
        config: emit_config(cfg),
        certificate,
        notes,
    };
    Ok(RunOutcome { rows, trace_csv, document, trace })
}

fn certificate_for(
    cfg: &RunConfig,
    built: &Built,
    trace: &IterationTrace,
    policy: &altmin::StepSizePolicy,
    z0: &BlockVector,
    notes: &mut Vec<String>,
) -> Result<Option<RateCertificate>, CliError> {
    let mut problem = built.problem.clone();
    let radius = if problem.optimum.is_some() {
        match estimate_radius(&problem, z0, &trace.iterates(), cfg.output.radius_samples, cfg.solver.seed) {
            Ok(r) => r,
            Err(e) => {
                notes.push(format!("radius estimation failed ({e}); distance bound and envelope were not checked"));
                problem.optimum = None;
                RadiusEstimate::unknown()
            }
        }
    } else {
        RadiusEstimate::unknown()
    };
    let constants = match constants_for_run(&problem, trace, policy, radius) {
        Ok(c) => c,
        Err(e) => {
            notes.push(format!("rate constants unavailable: {e}"));
            return Ok(None);
        }
    };
    certify(trace, &problem, &constants).map(Some).map_err(from_core)
}

fn trace_rows(trace: &IterationTrace, psi_star: Option<f64>) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            k: r.k,
            psi: r.psi,
            gap: psi_star.map(|s| r.psi - s),
            dx_norm: r.step.as_ref().map(|s| s.dx_norm),
            dy_norm: r.step.as_ref().map(|s| s.dy_norm),
            dz_norm: r.step.as_ref().map(|s| s.dz_norm),
            c_k: r.step.as_ref().and_then(|s| s.c),
            d_k: r.step.as_ref().and_then(|s| s.d),
            wall_time_s: r.wall_time,
        })
        .collect()
}

/// IRLS in the weights `w = 1/y`; rows carry the auxiliary `Ψ(x, 1/w)`.
fn run_irls(
    cfg: &RunConfig,
    built: &Built,
    z0: &BlockVector,
    sc: &SolveConfig,
) -> Result<(Vec<TraceRow>, StopReason), CliError> {
    let inst = built.sum_of_norms.as_ref().expect("checked at parse time");
    let p = &built.problem;
    let psi_star = p.optimum.as_ref().map(|o| o.psi_star);
    let linearized = cfg.solver.method == "irls-linearized";
    let mut x = z0.x.clone();
    let mut y = z0.y.clone();
    let psi_of = |x: &Vector, y: &Vector| p.psi(&BlockVector::new(x.clone(), y.clone())).map_err(from_core);
    let start = Instant::now();
    let mut rows = vec![TraceRow {
        k: 0,
        psi: psi_of(&x, &y)?,
        gap: None,
        dx_norm: None,
        dy_norm: None,
        dz_norm: None,
        c_k: None,
        d_k: None,
        wall_time_s: cfg.solver.record_timing.then_some(0.0),
    }];
    let mut stop = StopReason::MaxIterations;
    for k in 0..sc.max_iterations {
        let w = y.map(|v| 1.0 / v);
        let (c, (x1, w1)) = if linearized {
            let c = match cfg.solver.c {
                Some(c) => c,
                None => cfg.solver.gamma.unwrap_or(1.01) * inst.weighted_lipschitz(&w),
            };
            (Some(c), linearized_irls_step(inst, &x, &w, c).map_err(from_core)?)
        } else {
            (None, irls_step(inst, &x, &w).map_err(from_core)?)
        };
        let y1 = w1.map(|v| 1.0 / v);
        let dx = (&x1 - &x).norm();
        let dy = (&y1 - &y).norm();
        let dz = dx.hypot(dy);
        let last = rows.last_mut().expect("rows start non-empty");
        last.dx_norm = Some(dx);
        last.dy_norm = Some(dy);
        last.dz_norm = Some(dz);
        last.c_k = c;
        x = x1;
        y = y1;
        rows.push(TraceRow {
            k: k + 1,
            psi: psi_of(&x, &y)?,
            gap: None,
            dx_norm: None,
            dy_norm: None,
            dz_norm: None,
            c_k: None,
            d_k: None,
            wall_time_s: cfg.solver.record_timing.then(|| start.elapsed().as_secs_f64()),
        });
        if dz <= sc.stop_tolerance {
            stop = StopReason::StepTolerance;
            break;
        }
    }
    if let Some(s) = psi_star {
        for r in &mut rows {
            r.gap = Some(r.psi - s);
        }
    }
    Ok((rows, stop))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.16e}"))
}

pub fn render_trace(rows: &[TraceRow]) -> String {
    let mut out = TRACE_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{},{},{},{},{},{},{}",
            r.k,
            r.psi,
            cell(r.gap),
            cell(r.dx_norm),
            cell(r.dy_norm),
            cell(r.dz_norm),
            cell(r.c_k),
            cell(r.d_k),
            cell(r.wall_time_s)
        );
    }
    out
}

/// `k`, `k·gap` and `C/(k − 1)` for rows with a known gap; `C` is empty
/// without a certificate and at `k < 2`.
pub fn render_plot(rows: &[TraceRow], envelope_c: Option<f64>) -> String {
    let mut out = PLOT_HEADER.join(",");
    out.push('\n');
    for r in rows.iter().filter(|r| r.k >= 1) {
        let Some(gap) = r.gap else { continue };
        let env = envelope_c.filter(|_| r.k >= 2).map(|c| c / (r.k - 1) as f64);
        let _ = writeln!(out, "{},{:.16e},{}", r.k, r.k as f64 * gap, cell(env));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Runs `cfg` and writes the requested files. With `strict`, a failed
/// certificate becomes an error after the files are written.
pub fn run_and_emit(cfg: &RunConfig, outputs: &Outputs, strict: bool) -> Result<RunOutcome, CliError> {
    let mut outcome = run(cfg)?;
    if let Some(path) = &outputs.trace {
        write_file(path, &outcome.trace_csv)?;
        outcome.document.trace_file = Some(path.display().to_string());
    }
    if let Some(path) = &outputs.plot {
        let c = outcome.certificate().map(|c| c.constants.envelope_c);
        write_file(path, &render_plot(&outcome.rows, c))?;
    }
    if let Some(path) = &outputs.certificate {
        let json = serde_json::to_string_pretty(&outcome.document).expect("certificate document is serializable");
        write_file(path, &json)?;
    }
    if strict {
        if let Some(cert) = outcome.certificate().filter(|c| !c.overall) {
            let msg = match &cert.first_violation {
                Some(v) => format!("k = {}: {} (lhs {:e}, rhs {:e})", v.k, v.inequality, v.lhs, v.rhs),
                None => "certificate failed".into(),
            };
            return Err(CliError::Strict(msg));
        }
    }
    Ok(outcome)
}

/// Structural check of a certificate JSON file. Non-finite numbers are
/// written as `null`, so the check walks the JSON tree rather than
/// deserializing into [`CertificateDocument`].
pub fn validate_certificate_json(text: &str) -> Result<serde_json::Value, String> {
    use serde_json::Value;
    let v: Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
    let obj = v.as_object().ok_or("top level is not an object")?;
    if obj.get("schema").and_then(Value::as_str) != Some(SCHEMA) {
        return Err(format!("schema must be '{SCHEMA}'"));
    }
    for key in ["family", "method", "problem", "config", "stop_reason"] {
        if !obj.get(key).is_some_and(Value::is_string) {
            return Err(format!("'{key}' must be a string"));
        }
    }
    for key in ["seed", "instance_seed", "iterations"] {
        if !obj.get(key).is_some_and(Value::is_u64) {
            return Err(format!("'{key}' must be an unsigned integer"));
        }
    }
    let sha = obj.get("trace_sha256").and_then(Value::as_str).ok_or("'trace_sha256' must be a string")?;
    if sha.len() != 64 || !sha.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err("'trace_sha256' must be 64 hex digits".into());
    }
    if !obj.get("notes").is_some_and(Value::is_array) {
        return Err("'notes' must be an array".into());
    }
    match obj.get("certificate") {
        Some(Value::Null) => {}
        Some(Value::Object(c)) => {
            for key in ["variant", "constants", "records", "overall", "tolerance", "notes"] {
                if !c.contains_key(key) {
                    return Err(format!("certificate lacks '{key}'"));
                }
            }
            if !c["overall"].is_boolean() || !c["records"].is_array() {
                return Err("certificate 'overall' must be a bool and 'records' an array".into());
            }
            let iterations = obj["iterations"].as_u64().unwrap_or(0) as usize;
            if c["records"].as_array().map(Vec::len) != Some(iterations + 1) {
                return Err("certificate records do not match the iteration count".into());
            }
        }
        _ => return Err("'certificate' must be an object or null".into()),
    }
    Ok(v)
}
