//! Per-step quantities from the strong-convergence argument, evaluated on a
//! recorded trace.
//!
//! For a step `x_n → x_{n+1}` with `z` the anchor limit and `p ∈ F(T)`:
//!
//! - anchor pairing `⟨u − z, J(x_{n+1} − z)⟩`, whose limsup is `≤ 0`;
//! - one-step recursion
//!   `‖x_{n+1} − z‖² ≤ (1 − β_n)‖x_n − z‖² + 2β_n⟨u − z, J(x_{n+1} − z)⟩`;
//! - key inequality
//!   `2α_n(1 − β_n − γ_n)(λ − K²α_n)‖x_n − Tx_n‖² ≤ ‖x_n − z‖² − ‖x_{n+1} − z‖² + β_n‖u − z‖²`;
//! - boundedness `‖x_n − p‖ ≤ max{‖x_0 − p‖, ‖u − p‖}`.
//!
//! Slacks are `right side − left side`; a negative slack beyond the tolerance
//! is a violation.

use alloc::vec::Vec;

use crate::error::Result;
use crate::operators::Operator;
use crate::tolerance::Tolerances;
use crate::vector::{self, Vector};

use super::IterationTrace;

/// Fraction of the run after which an ascent of `‖x_n − z‖²` counts as Case 2.
pub const CASE_BURN_IN: f64 = 0.1;
/// Fraction of the run used for tail statistics.
pub const TAIL_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CaseLabel {
    /// `‖x_n − z‖²` eventually nonincreasing.
    Case1,
    /// Ascents persist past the burn-in; the τ-sequence argument applies.
    Case2,
}

/// One row of the persisted trace. Transition-based fields are absent on the
/// final row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub n: usize,
    pub residual: f64,
    pub dist_to_z: f64,
    pub anchor_pairing: Option<f64>,
    pub bound_slack: f64,
    pub ineq35_slack: Option<f64>,
    pub key_ineq_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub rows: Vec<DiagnosticRow>,
    pub case: CaseLabel,
    pub bound_violations: usize,
    pub ineq35_violations: usize,
    pub key_ineq_violations: usize,
    pub min_bound_slack: f64,
    pub min_ineq35_slack: f64,
    pub min_key_ineq_slack: f64,
    /// Max anchor pairing over the last [`TAIL_WINDOW`] of steps.
    pub tail_max_anchor_pairing: f64,
    /// Max residual over the last [`TAIL_WINDOW`] of iterates.
    pub tail_max_residual: f64,
}

impl Diagnostics {
    pub fn all_hold(&self) -> bool {
        self.bound_violations == 0 && self.ineq35_violations == 0 && self.key_ineq_violations == 0
    }

    /// `‖x_n − z‖²` along the run.
    pub fn error_sequence(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.dist_to_z * r.dist_to_z).collect()
    }
}

fn tail_start(len: usize) -> usize {
    let k = libm::ceil((len as f64) * TAIL_WINDOW) as usize;
    len - k.clamp(1, len.max(1))
}

/// Evaluates every diagnostic on `trace` using the anchor limit `z` and the
/// fixed point `p`. `λ` is the operator's claimed constant and `K²` comes
/// from its space.
pub fn diagnostics(t: &Operator, trace: &IterationTrace, z: &Vector, p: &Vector) -> Result<Diagnostics> {
    diagnostics_with(t, trace, z, p, &Tolerances::default())
}

pub fn diagnostics_with(
    t: &Operator,
    trace: &IterationTrace,
    z: &Vector,
    p: &Vector,
    tol: &Tolerances,
) -> Result<Diagnostics> {
    let space = t.space();
    space.check_dim(z)?;
    space.check_dim(p)?;
    let lambda = t.lambda().ok_or_else(|| {
        crate::Error::InvalidParameter("diagnostics need an operator with a claimed lambda".into())
    })?;
    let k2 = space.k2();
    let u = trace.u.as_slice();
    let u_z = vector::sub(u, z.as_slice());
    let u_z2 = space.norm_sq_of(&u_z);
    let radius = space
        .norm_of(&vector::sub(trace.x0().as_slice(), p.as_slice()))
        .max(space.norm_of(&vector::sub(u, p.as_slice())));

    let iterates: Vec<&Vector> = trace.iterates().collect();
    let err: Vec<Vec<f64>> = iterates
        .iter()
        .map(|x| vector::sub(x.as_slice(), z.as_slice()))
        .collect();
    let err2: Vec<f64> = err.iter().map(|e| space.norm_sq_of(e)).collect();

    let mut rows = Vec::with_capacity(iterates.len());
    let mut out = Diagnostics {
        rows: Vec::new(),
        case: CaseLabel::Case1,
        bound_violations: 0,
        ineq35_violations: 0,
        key_ineq_violations: 0,
        min_bound_slack: f64::INFINITY,
        min_ineq35_slack: f64::INFINITY,
        min_key_ineq_slack: f64::INFINITY,
        tail_max_anchor_pairing: f64::NEG_INFINITY,
        tail_max_residual: f64::NEG_INFINITY,
    };
    for (n, x) in iterates.iter().enumerate() {
        let dist_p = space.norm_of(&vector::sub(x.as_slice(), p.as_slice()));
        let bound_slack = radius - dist_p;
        out.min_bound_slack = out.min_bound_slack.min(bound_slack);
        if !tol.slack_ok(bound_slack, radius) {
            out.bound_violations += 1;
        }
        let mut row = DiagnosticRow {
            n,
            residual: trace.steps.get(n).map_or(trace.final_residual, |s| s.residual),
            dist_to_z: libm::sqrt(err2[n]),
            anchor_pairing: None,
            bound_slack,
            ineq35_slack: None,
            key_ineq_slack: None,
        };
        if let Some(step) = trace.steps.get(n) {
            let prm = step.params;
            let pairing = space.pairing_of(&u_z, &err[n + 1]);
            let rhs35 = (1.0 - prm.beta) * err2[n] + 2.0 * prm.beta * pairing;
            let s35 = rhs35 - err2[n + 1];
            let mag35 = err2[n + 1].max(err2[n]).max((2.0 * prm.beta * pairing).abs());
            if !tol.slack_ok(s35, mag35) {
                out.ineq35_violations += 1;
            }
            let lhs_key = 2.0
                * prm.alpha
                * (1.0 - prm.beta - prm.gamma)
                * (lambda - k2 * prm.alpha)
                * step.residual
                * step.residual;
            let skey = err2[n] - err2[n + 1] + prm.beta * u_z2 - lhs_key;
            let mag_key = lhs_key.abs().max(err2[n]).max(err2[n + 1]).max(prm.beta * u_z2);
            if !tol.slack_ok(skey, mag_key) {
                out.key_ineq_violations += 1;
            }
            out.min_ineq35_slack = out.min_ineq35_slack.min(s35);
            out.min_key_ineq_slack = out.min_key_ineq_slack.min(skey);
            row.anchor_pairing = Some(pairing);
            row.ineq35_slack = Some(s35);
            row.key_ineq_slack = Some(skey);
        }
        rows.push(row);
    }

    let steps = trace.steps.len();
    if steps > 0 {
        out.tail_max_anchor_pairing = rows[tail_start(steps)..steps]
            .iter()
            .filter_map(|r| r.anchor_pairing)
            .fold(f64::NEG_INFINITY, f64::max);
    }
    out.tail_max_residual = rows[tail_start(rows.len())..]
        .iter()
        .map(|r| r.residual)
        .fold(f64::NEG_INFINITY, f64::max);
    let burn_in = ((err2.len() as f64) * CASE_BURN_IN) as usize;
    if err2.windows(2).skip(burn_in).any(|w| w[0] < w[1]) {
        out.case = CaseLabel::Case2;
    }
    out.rows = rows;
    Ok(out)
}
