//! Two-block convex alternating minimization.
//!
//! Problems have the form `minimize f(x) + H(x, y) + g(y)` with `f`, `g`
//! proper closed convex and `H` smooth convex. The crate provides the
//! proximal catalog ([`prox`]), the solver family ([`solvers`]), per-iteration
//! rate certificates ([`certify`]) and two application builders ([`apps`]).

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod certify;
pub mod error;
pub mod families;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use problem::{BlockVector, LipschitzBounds, Optimum, SeparableProblem};
pub use solvers::{solve, IterationTrace, SolveConfig, StepSizePolicy, Variant};
