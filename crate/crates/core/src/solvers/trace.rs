use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::problem::{BlockVector, BoundViolation};

/// The alternating-minimization schemes implemented by [`crate::solvers`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Exact minimization in both blocks.
    Am,
    /// Exact minimization with proximal terms in both blocks.
    Aam,
    /// Prox-linearized in both blocks, y-gradient at `(x^{k+1}, y^k)`.
    Palm,
    /// Prox-linearized x-step, exact y-step.
    Variant1,
    /// Prox-linearized in both blocks from the same snapshot `(x^k, y^k)`.
    Variant2,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Am, Variant::Aam, Variant::Palm, Variant::Variant1, Variant::Variant2];

    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Am => "am",
            Variant::Aam => "aam",
            Variant::Palm => "palm",
            Variant::Variant1 => "variant1",
            Variant::Variant2 => "variant2",
        }
    }

    /// Whether a sublinear rate envelope with explicit constants is available.
    pub fn is_certified(&self) -> bool {
        !matches!(self, Variant::Am)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver variant '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIterations,
    StepTolerance,
}

/// Quantities of the step from `z^k` to `z^{k+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub dx_norm: f64,
    pub dy_norm: f64,
    pub dz_norm: f64,
    /// Fixed-point residual of the implicit prox form, for schemes with exact solves.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub z: BlockVector,
    pub psi: f64,
    /// `None` on the final record.
    pub step: Option<StepRecord>,
    /// Seconds since the start of the run, when timing is enabled.
    pub wall_time: Option<f64>,
}

/// Append-only record of a solver run, indexed contiguously from `k = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub variant: Variant,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub seed: u64,
    /// Iterates at which the observed moduli left the declared bounds.
    pub bound_violations: Vec<BoundViolation>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iterates(&self) -> Vec<BlockVector> {
        self.records.iter().map(|r| r.z.clone()).collect()
    }

    pub fn iterate(&self, k: usize) -> &BlockVector {
        &self.records[k].z
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("traces hold at least the initial point")
    }

    pub fn psi_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.psi).collect()
    }

    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// True when `psi_{k+1} ≤ psi_k + slack` for every `k`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records.windows(2).all(|w| w[1].psi <= w[0].psi + slack)
    }

    /// Bitwise equality of everything except wall-clock timings.
    pub fn same_iterates(&self, other: &IterationTrace) -> bool {
        self.variant == other.variant
            && self.stop_reason == other.stop_reason
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.k == b.k
                    && bits_eq(a.psi, b.psi)
                    && a.z.x.iter().zip(b.z.x.iter()).all(|(p, q)| bits_eq(*p, *q))
                    && a.z.y.iter().zip(b.z.y.iter()).all(|(p, q)| bits_eq(*p, *q))
                    && a.step == b.step
            })
    }
}

fn bits_eq(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}
