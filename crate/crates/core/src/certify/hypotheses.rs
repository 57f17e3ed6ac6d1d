//! Step-wise checks of the smoothness hypotheses each certificate rests on,
//! evaluated on the pairs of points the run actually visited.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{concat, Vector};
use crate::problem::{BlockVector, SeparableProblem};
use crate::solvers::{IterationTrace, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub k: usize,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

const L1_SECANT: &str = "L1 secant: |grad_x H(x^{k+1},y^k) - grad_x H(x^k,y^k)| <= L1(y^k) |x^{k+1}-x^k|";
const L1_MODEL: &str =
    "L1 descent model: H(x^{k+1},y^k) - H(x^k,y^k) - <grad_x H(x^k,y^k), dx> <= L1(y^k)/2 |dx|^2";
const L2_SECANT: &str =
    "L2 secant: |grad_y H(x^{k+1},y^{k+1}) - grad_y H(x^{k+1},y^k)| <= L2(x^{k+1}) |y^{k+1}-y^k|";
const L2_MODEL: &str =
    "L2 descent model: H(x^{k+1},y^{k+1}) - H(x^{k+1},y^k) - <grad_y H(x^{k+1},y^k), dy> <= L2(x^{k+1})/2 |dy|^2";
const L3_SECANT: &str = "L3 secant: |grad_y H(x^{k+1},y^k) - grad_y H(x^k,y^k)| <= L3(y^k) |x^{k+1}-x^k|";
const L4_SECANT: &str =
    "L4 secant: |grad_x H(x^{k+1},y^{k+1}) - grad_x H(x^{k+1},y^k)| <= L4(x^{k+1}) |y^{k+1}-y^k|";
const L5_SECANT: &str = "L5 secant: |grad H(z^{k+1}) - grad H(z^k)| <= L5 |z^{k+1}-z^k|";
const L5_MODEL: &str = "L5 descent model: H(z^{k+1}) - H(z^k) - <grad H(z^k), dz> <= L5/2 |dz|^2";
pub(crate) const RADIUS: &str = "radius: |z^k - z*| <= R";
pub(crate) const Y_START: &str = "y start: H(x^0,y^0) + g(y^0) <= min_y {H(x^0,y) + g(y)}";

fn secant(k: usize, name: &str, ga: &Vector, gb: &Vector, modulus: f64, dist: f64) -> HypothesisCheck {
    let lhs = (ga - gb).norm();
    let rhs = modulus * dist;
    let scale = ga.norm().max(gb.norm()).max(1.0);
    HypothesisCheck { k, name: name.into(), lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9) + 1e-12 * scale }
}

fn model(k: usize, name: &str, h_next: f64, h_cur: f64, slope: f64, modulus: f64, dist: f64) -> HypothesisCheck {
    let lhs = h_next - h_cur - slope;
    let rhs = 0.5 * modulus * dist * dist;
    HypothesisCheck { k, name: name.into(), lhs, rhs, pass: lhs <= rhs + 1e-12 * h_cur.abs().max(1.0) }
}

/// Every applicable hypothesis check for `trace`'s scheme, in step order.
/// Checks whose modulus oracle is absent are skipped.
pub fn check_hypotheses(trace: &IterationTrace, problem: &SeparableProblem) -> Result<Vec<HypothesisCheck>> {
    let (gx, gy, h) = (&problem.grad_x_h, &problem.grad_y_h, &problem.h_value);
    let mut out = Vec::new();
    for (k, w) in trace.records.windows(2).enumerate() {
        let (cur, next) = (&w[0].z, &w[1].z);
        problem.check_dims(cur)?;
        let dx_vec = &next.x - &cur.x;
        let dy_vec = &next.y - &cur.y;
        let (dx, dy) = (dx_vec.norm(), dy_vec.norm());

        let x_block = |out: &mut Vec<HypothesisCheck>| {
            if let Some(l1) = &problem.lip_l1 {
                let (l, g0) = (l1(&cur.y), gx(&cur.x, &cur.y));
                out.push(secant(k, L1_SECANT, &gx(&next.x, &cur.y), &g0, l, dx));
                let (h1, h0) = (h(&next.x, &cur.y), h(&cur.x, &cur.y));
                out.push(model(k, L1_MODEL, h1, h0, g0.dot(&dx_vec), l, dx));
            }
        };
        match trace.variant {
            Variant::Am => {}
            Variant::Variant1 => x_block(&mut out),
            Variant::Palm => {
                x_block(&mut out);
                if let Some(l2) = &problem.lip_l2 {
                    let (l, g0) = (l2(&next.x), gy(&next.x, &cur.y));
                    out.push(secant(k, L2_SECANT, &gy(&next.x, &next.y), &g0, l, dy));
                    let (h1, h0) = (h(&next.x, &next.y), h(&next.x, &cur.y));
                    out.push(model(k, L2_MODEL, h1, h0, g0.dot(&dy_vec), l, dy));
                }
                if let Some(l3) = &problem.lip_l3 {
                    out.push(secant(k, L3_SECANT, &gy(&next.x, &cur.y), &gy(&cur.x, &cur.y), l3(&cur.y), dx));
                }
            }
            Variant::Variant2 => {
                if let Some(l5) = problem.lip_l5 {
                    let full = |z: &BlockVector| concat(&gx(&z.x, &z.y), &gy(&z.x, &z.y));
                    let (g0, g1) = (full(cur), full(next));
                    let dz = (dx * dx + dy * dy).sqrt();
                    out.push(secant(k, L5_SECANT, &g1, &g0, l5, dz));
                    let slope = g0.dot(&concat(&dx_vec, &dy_vec));
                    out.push(model(k, L5_MODEL, h(&next.x, &next.y), h(&cur.x, &cur.y), slope, l5, dz));
                }
            }
            Variant::Aam => {
                if let Some(l4) = &problem.lip_l4 {
                    out.push(secant(k, L4_SECANT, &gx(&next.x, &next.y), &gx(&next.x, &cur.y), l4(&next.x), dy));
                }
            }
        }
    }
    Ok(out)
}

/// Variant-I only: the distance bound at `k = 0` uses that `y⁰` minimizes
/// `H(x⁰, ·) + g`, which later iterates satisfy by construction. Compared by
/// value, so ties between minimizers pass. `None` for other schemes or without
/// an exact y-minimizer.
pub fn check_start_optimality(trace: &IterationTrace, problem: &SeparableProblem) -> Result<Option<HypothesisCheck>> {
    let (Variant::Variant1, Some(argmin_y), Some(first)) = (trace.variant, &problem.exact_argmin_y, trace.records.first())
    else {
        return Ok(None);
    };
    let z0 = &first.z;
    let best = BlockVector::new(z0.x.clone(), argmin_y(&z0.x)?);
    let (at_start, at_best) = (problem.psi(z0)?, problem.psi(&best)?);
    let lhs = at_start - at_best;
    Ok(Some(HypothesisCheck {
        k: 0,
        name: Y_START.into(),
        lhs,
        rhs: 0.0,
        pass: lhs <= 1e-10 * at_start.abs().max(1.0),
    }))
}

/// `‖z^k − z*‖ ≤ R` for every iterate.
pub fn check_radius_cover(trace: &IterationTrace, z_star: &BlockVector, radius: f64) -> Vec<HypothesisCheck> {
    trace
        .records
        .iter()
        .map(|r| {
            let lhs = r.z.distance(z_star);
            HypothesisCheck {
                k: r.k,
                name: RADIUS.into(),
                lhs,
                rhs: radius,
                pass: lhs <= radius * (1.0 + 1e-9) + 1e-12,
            }
        })
        .collect()
}
