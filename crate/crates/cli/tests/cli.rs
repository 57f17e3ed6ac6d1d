use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use altmin_cli::{emit_config, parse_config, run, run_and_emit, validate_certificate_json, CliError, Outputs};

fn altmin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_altmin")).args(args).current_dir(dir).output().unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = parse_config(&std::fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{path:?}: {e}"));
        assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg, "{path:?}");
    }
}

#[test]
fn scalar_trace_has_the_hand_solved_first_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("scalar-variant1.toml");
    let out = altmin(
        &["--config", cfg.to_str().unwrap(), "--trace-out", "t.csv", "--certificate-out", "c.json", "--plot-out", "p.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = read_csv(&dir.path().join("t.csv"));
    assert_eq!(rows[0], ["k", "psi", "gap", "dx_norm", "dy_norm", "dz_norm", "c_k", "d_k", "wall_time_s"]);
    // z^0 = (0, 1) → z^1 = (1/3, 2/3): dx = 1/3, dy = 1/3, psi = 1/6
    let psi1: f64 = rows[2][1].parse().unwrap();
    assert!((psi1 - 1.0 / 6.0).abs() < 1e-15);
    let dx: f64 = rows[1][3].parse().unwrap();
    let dy: f64 = rows[1][4].parse().unwrap();
    assert!((dx - 1.0 / 3.0).abs() < 1e-15 && (dy - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(rows[1][6].parse::<f64>().unwrap(), 2.0, "c = gamma * L1 = 2");
    assert!(rows[1][8].is_empty(), "timing is off by default");

    let doc = validate_certificate_json(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(doc["certificate"]["overall"], true);
    assert_eq!(doc["certificate"]["constants"]["radius"]["source"], "analytic");
    assert_eq!(doc["seed"], 0);
    assert_eq!(doc["trace_file"], "t.csv");

    let plot = read_csv(&dir.path().join("p.csv"));
    assert_eq!(plot[0], ["k", "k_gap", "envelope"]);
    assert!(plot[1][2].is_empty(), "no envelope at k = 1");
    assert!(!plot[2][2].is_empty());
}

#[test]
fn trace_floats_round_trip_bitwise() {
    let cfg = parse_config("[problem]\nfamily = \"composite\"\n[solver]\nmethod = \"aam\"\nmax_iter = 30\n").unwrap();
    let out = run(&cfg).unwrap();
    let trace = out.trace.as_ref().unwrap();
    let mut r = csv::Reader::from_reader(out.trace_csv.as_bytes());
    for (rec, expect) in r.records().zip(&trace.records) {
        let rec = rec.unwrap();
        assert_eq!(rec[1].parse::<f64>().unwrap().to_bits(), expect.psi.to_bits());
        if let Some(step) = &expect.step {
            assert_eq!(rec[5].parse::<f64>().unwrap().to_bits(), step.dz_norm.to_bits());
        }
    }
}

#[test]
fn seed_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[problem]\nfamily = \"scalar\"\n").unwrap();
    let out = altmin(&["--config", "c.toml", "--seed", "17", "--max-iter", "3", "--certificate-out", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc = validate_certificate_json(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(doc["seed"], 17);
    assert!(doc["config"].as_str().unwrap().contains("max_iter = 3"));
}

#[test]
fn strict_failure_names_the_first_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("composite-misdeclared.toml");
    let cfg = cfg.to_str().unwrap();
    let out = altmin(&["--config", cfg, "--strict", "--certificate-out", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("L1 secant"), "{stderr}");
    let doc = validate_certificate_json(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(doc["certificate"]["overall"], false);
    assert!(doc["certificate"]["first_violation"]["inequality"].as_str().unwrap().starts_with("L1 "));
    // without --strict the same run succeeds
    assert_eq!(altmin(&["--config", cfg], dir.path()).status.code(), Some(0));
}

#[test]
fn config_errors_exit_2_and_list_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[problem]\nrho = 0.0\nepsilon = -1.0\n[solver]\nmethod = \"newton\"\n").unwrap();
    let out = altmin(&["--config", "c.toml", "--trace-out", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("config error")).count(), 3, "{stderr}");
    assert!(!dir.path().join("t.csv").exists());
    assert_eq!(altmin(&["--config", "missing.toml"], dir.path()).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_5_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[problem]\nfamily = \"scalar\"\n").unwrap();
    let out = altmin(&["--config", "c.toml", "--trace-out", "no/such/dir/t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/dir/t.csv"));
}

#[test]
fn exhausted_inner_solver_exits_3() {
    // l1 x-subproblem with a full-column-rank A needs the iterative solver
    let text = "[problem]\nfamily = \"composite\"\nrows = 20\ncols = 10\ninner_max_iter = 1\n[solver]\nmethod = \"am\"\n[start]\nx = [1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0,1.0]\n";
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), text).unwrap();
    let out = altmin(&["--config", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn am_without_exact_x_step_is_a_config_error() {
    let errs = parse_config("[problem]\nfamily = \"composite\"\n[solver]\nmethod = \"am\"\n").unwrap_err().0;
    assert!(errs.iter().any(|e| e.contains("exact_argmin_x")), "{errs:?}");
}

#[test]
fn matrix_and_vector_files_are_read() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), "c1,c2\n1.0,0.0\n0.0,2.0\n1.0,1.0\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "1.0\n-1.0\n0.5\n").unwrap();
    let text = format!(
        "[problem]\nfamily = \"composite\"\nmatrix = {:?}\nvector = {:?}\nf = \"quadratic\"\n[solver]\nmethod = \"am\"\nmax_iter = 200\n",
        dir.path().join("a.csv"),
        dir.path().join("b.csv")
    );
    let cfg = parse_config(&text).unwrap();
    let out = run(&cfg).unwrap();
    assert_eq!(out.trace.as_ref().unwrap().iterate(0).dims(), (2, 3));
    // both terms quadratic: the optimum is known in closed form
    assert!(out.rows.last().unwrap().gap.unwrap().abs() < 1e-12);

    let bad = text.replace("b.csv", "missing.csv");
    let errs = parse_config(&bad).unwrap_err().0;
    assert!(errs.iter().any(|e| e.contains("missing.csv")), "{errs:?}");
}

#[test]
fn sparse_family_uses_the_reference_optimum() {
    let text = std::fs::read_to_string(configs_dir().join("sparse-nonneg-palm.toml")).unwrap();
    let mut cfg = parse_config(&text).unwrap();
    cfg.problem.reference_iterations = 20_000;
    cfg.solver.max_iter = 200;
    let out = run(&cfg).unwrap();
    let cert = out.certificate().unwrap();
    assert!(cert.overall, "{:?}", cert.first_violation);
    assert_eq!(cert.constants.radius.source, altmin::certify::RadiusSource::Sampled);
    assert!(out.document.optimum_source.as_deref().unwrap().contains("am iterations"));
}

#[test]
fn irls_methods_and_forward_backward_run() {
    let base = std::fs::read_to_string(configs_dir().join("sum-of-norms-irls.toml")).unwrap();
    let irls = run(&parse_config(&base).unwrap()).unwrap();
    assert!(irls.rows.windows(2).all(|w| w[1].psi <= w[0].psi + 1e-12));

    let lin = parse_config(&base.replace("\"irls\"", "\"irls-linearized\"")).unwrap();
    let v1 = parse_config(&base.replace("\"irls\"", "\"variant1\"")).unwrap();
    let (a, b) = (run(&lin).unwrap(), run(&v1).unwrap());
    for (r, s) in a.rows.iter().zip(&b.rows) {
        assert!((r.psi - s.psi).abs() <= 1e-10 * s.psi.abs().max(1.0), "k = {}", r.k);
    }

    let pfb = parse_config(&base.replace("\"irls\"", "\"pfb\"")).unwrap();
    assert!(pfb.solver.step.unwrap() > 0.0);
    let out = run(&pfb).unwrap();
    assert!(out.rows.iter().all(|r| r.gap.is_none()));
    assert!(out.certificate().is_none());
}

#[test]
fn run_and_emit_reports_io_errors() {
    let cfg = parse_config("[problem]\nfamily = \"scalar\"\n").unwrap();
    let outputs = Outputs { certificate: Some("/nonexistent/dir/c.json".into()), ..Outputs::default() };
    match run_and_emit(&cfg, &outputs, false) {
        Err(e @ CliError::Io { .. }) => assert_eq!(e.exit_code(), 5),
        other => panic!("expected an I/O error, got {:?}", other.err()),
    }
}

#[test]
fn parallel_flag_leaves_the_trace_unchanged() {
    let text = std::fs::read_to_string(configs_dir().join("composite-variant2.toml")).unwrap();
    let par = parse_config(&text).unwrap();
    let mut seq = par.clone();
    seq.solver.parallel = false;
    assert_eq!(run(&par).unwrap().trace_csv, run(&seq).unwrap().trace_csv);
}

#[test]
fn schema_check_rejects_tampered_documents() {
    let cfg = parse_config("[problem]\nfamily = \"scalar\"\n").unwrap();
    let json = serde_json::to_string(&run(&cfg).unwrap().document).unwrap();
    assert!(validate_certificate_json(&json).is_ok());
    assert!(validate_certificate_json(&json.replace("altmin-certificate/1", "other")).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["trace_sha256"] = "abc".into();
    assert!(validate_certificate_json(&v.to_string()).is_err());
}
