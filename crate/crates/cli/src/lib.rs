//! Batch front end: a TOML config in, a trace CSV, a certificate JSON and
//! a plot CSV out.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod config;
pub mod run;

pub use config::{emit_config, parse_config, ConfigErrors, RunConfig};
pub use run::{exit, run, run_and_emit, validate_certificate_json, CertificateDocument, CliError, Outputs, RunOutcome};
