#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::path::PathBuf;
use std::process::ExitCode;

use altmin_cli::{exit, parse_config, run_and_emit, CliError, ConfigErrors, Outputs};
use clap::Parser;

/// Run an alternating-minimization scheme from a TOML config and certify the trace.
#[derive(Parser, Debug)]
#[command(name = "altmin", version)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    certificate_out: Option<PathBuf>,
    #[arg(long)]
    plot_out: Option<PathBuf>,
    /// Exit with status 4 when the certificate fails.
    #[arg(long)]
    strict: bool,
    /// Overrides solver.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides solver.max_iter.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long)]
    emit_config: bool,
}

fn report(e: &CliError) -> ExitCode {
    match e {
        CliError::Config(ConfigErrors(list)) => {
            for msg in list {
                eprintln!("config error: {msg}");
            }
        }
        other => eprintln!("{other}"),
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            return report(&CliError::Config(ConfigErrors(vec![format!(
                "cannot read {}: {e}",
                args.config.display()
            )])))
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return report(&CliError::Config(e)),
    };
    if let Some(seed) = args.seed {
        cfg.solver.seed = seed;
    }
    if let Some(n) = args.max_iter {
        if n == 0 {
            return report(&CliError::Config(ConfigErrors(vec!["--max-iter must be at least 1".into()])));
        }
        cfg.solver.max_iter = n;
    }
    if args.emit_config {
        print!("{}", altmin_cli::emit_config(&cfg));
        return ExitCode::from(exit::OK as u8);
    }
    let outputs = Outputs {
        trace: args.trace_out.or_else(|| cfg.output.trace.clone()),
        certificate: args.certificate_out.or_else(|| cfg.output.certificate.clone()),
        plot: args.plot_out.or_else(|| cfg.output.plot.clone()),
    };
    match run_and_emit(&cfg, &outputs, args.strict) {
        Ok(outcome) => {
            let last = outcome.rows.last().expect("a trace holds at least z0");
            let verdict = match outcome.certificate() {
                Some(c) if c.overall => "certificate: pass".to_string(),
                Some(c) => format!(
                    "certificate: FAIL{}",
                    c.first_violation.as_ref().map_or(String::new(), |v| format!(" at k = {}: {}", v.k, v.inequality))
                ),
                None => "certificate: none".to_string(),
            };
            println!(
                "{} on {}: {} iterations, psi = {:.12e}; {verdict}",
                cfg.solver.method, outcome.document.problem, outcome.document.iterations, last.psi
            );
            ExitCode::from(exit::OK as u8)
        }
        Err(e) => report(&e),
    }
}
