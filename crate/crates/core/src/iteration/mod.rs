//! The modified Mann iteration
//! `x_{n+1} = β_n u + γ_n x_n + (1 − β_n − γ_n)[α_n T x_n + (1 − α_n) x_n]`,
//! its `γ ≡ 0` special case, and the tools used to analyze its runs.

pub mod anchor;
pub mod diagnostics;
pub mod recursion;
pub mod tau;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operators::{averaged_point, Operator};
use crate::schedules::{ScheduleSet, StepParams};
use crate::vector::{self, Vector};

pub use anchor::{anchor_limit, anchor_solve, AnchorLimit, AnchorPath, DEFAULT_SOLVER_TOL, DEFAULT_T_GRID};
pub use diagnostics::{diagnostics, diagnostics_with, CaseLabel, DiagnosticRow, Diagnostics};
pub use recursion::{lemma22_harness, RecursionTrajectory};
pub use tau::{mainge_tau, TauAnalysis, TauOutcome};

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
/// The divergence guard fires when `‖x_n‖` exceeds
/// `GUARD_FACTOR · max{‖x_0 − p‖, ‖u − p‖} + ‖p‖`.
pub const GUARD_FACTOR: f64 = 1e2;

/// One iterate together with the quantities the analysis tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub n: usize,
    /// `x_n`.
    pub x: Vector,
    /// `y_n = T_{α_n} x_n`.
    pub y: Vector,
    /// `‖x_n − T x_n‖`.
    pub residual: f64,
    pub dist_to_z: Option<f64>,
    pub anchor_pairing: Option<f64>,
    pub bound_slack: Option<f64>,
}

impl IterationState {
    pub fn initial(t: &Operator, s: &ScheduleSet, x0: &Vector) -> Result<Self> {
        Self::at(t, s, 0, x0.clone())
    }

    fn at(t: &Operator, s: &ScheduleSet, n: usize, x: Vector) -> Result<Self> {
        t.space().check_dim(&x)?;
        let tx = t.eval_slice(x.as_slice());
        let alpha = s.at(n).alpha;
        let y = averaged_point(alpha, x.as_slice(), &tx);
        let residual = t.space().norm_of(&vector::sub(x.as_slice(), &tx));
        Ok(Self {
            n,
            x,
            y: Vector::from_raw(y),
            residual,
            dist_to_z: None,
            anchor_pairing: None,
            bound_slack: None,
        })
    }
}

fn check_params(n: usize, p: &StepParams) -> Result<()> {
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    if !(unit(p.alpha) && unit(p.beta) && unit(p.gamma)) {
        return Err(Error::ScheduleOutOfRange {
            n,
            reason: format!(
                "alpha = {}, beta = {}, gamma = {} must lie in [0, 1]",
                p.alpha, p.beta, p.gamma
            ),
        });
    }
    if p.beta + p.gamma > 1.0 {
        return Err(Error::ScheduleOutOfRange {
            n,
            reason: format!("beta + gamma = {} exceeds 1", p.beta + p.gamma),
        });
    }
    Ok(())
}

/// `(y, x_next)` for one step from `x` given `Tx`.
pub(crate) fn mann_update(p: &StepParams, u: &[f64], x: &[f64], tx: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let y = averaged_point(p.alpha, x, tx);
    let w = 1.0 - p.beta - p.gamma;
    let next = u
        .iter()
        .zip(x)
        .zip(&y)
        .map(|((ui, xi), yi)| p.beta * ui + p.gamma * xi + w * yi)
        .collect();
    (y, next)
}

/// The `γ ≡ 0` scheme `x_{n+1} = β_n u + (1 − β_n)[α_n T x_n + (1 − α_n) x_n]`.
pub fn halpern_step(t: &Operator, alpha: f64, beta: f64, u: &Vector, x: &Vector) -> Result<Vector> {
    t.space().check_dim(u)?;
    t.space().check_dim(x)?;
    check_params(
        0,
        &StepParams {
            alpha,
            beta,
            gamma: 0.0,
        },
    )?;
    let tx = t.eval_slice(x.as_slice());
    let y = averaged_point(alpha, x.as_slice(), &tx);
    Ok(Vector::from_raw(
        u.as_slice()
            .iter()
            .zip(&y)
            .map(|(ui, yi)| beta * ui + (1.0 - beta) * yi)
            .collect(),
    ))
}

/// Advances `state` (at index `n`) by one step of the modified Mann iteration.
pub fn step(t: &Operator, s: &ScheduleSet, u: &Vector, state: &IterationState) -> Result<IterationState> {
    t.space().check_dim(u)?;
    t.space().check_dim(&state.x)?;
    let p = s.at(state.n);
    check_params(state.n, &p)?;
    let tx = t.eval_slice(state.x.as_slice());
    let (_, next) = mann_update(&p, u.as_slice(), state.x.as_slice(), &tx);
    IterationState::at(t, s, state.n + 1, Vector::from_raw(next))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub max_iter: usize,
    /// Stop once both `‖x_n − T x_n‖` and the step `‖x_{n+1} − x_n‖` fall
    /// to this level. The step condition keeps the run going when `x_0`
    /// happens to be fixed but is not yet the anchored limit.
    pub residual_tol: f64,
    /// A known point of `F(T)`, used by the divergence guard.
    pub fixed_point: Option<Vector>,
}

impl RunOptions {
    pub fn new(max_iter: usize) -> Self {
        Self {
            max_iter,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            fixed_point: None,
        }
    }

    pub fn with_fixed_point(mut self, p: Vector) -> Self {
        self.fixed_point = Some(p);
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }
}

/// One executed step: the iterate it started from and the parameters used.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub x: Vector,
    pub residual: f64,
    pub params: StepParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub u: Vector,
    pub steps: Vec<StepRecord>,
    pub final_x: Vector,
    pub final_residual: f64,
    /// Whether the run ended on the stopping rule rather than `max_iter`.
    pub converged: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    /// `x_0, …, x_N`.
    pub fn iterates(&self) -> impl Iterator<Item = &Vector> {
        self.steps.iter().map(|r| &r.x).chain(core::iter::once(&self.final_x))
    }

    pub fn x0(&self) -> &Vector {
        self.steps.first().map_or(&self.final_x, |r| &r.x)
    }
}

/// Runs the iteration from `x0` until the stopping rule of
/// [`RunOptions::residual_tol`] or `max_iter`.
///
/// The schedule must satisfy `β_n ∈ (0,1)`, `γ_n ∈ [0,1)`, `β_n + γ_n < 1` for
/// every step of the horizon; this is checked before the first step.
pub fn run(t: &Operator, s: &ScheduleSet, u: &Vector, x0: &Vector, opts: &RunOptions) -> Result<IterationTrace> {
    let space = t.space();
    space.check_dim(u)?;
    space.check_dim(x0)?;
    s.validate()?;
    if let Some((n, reason)) = s.first_range_violation(opts.max_iter.max(1)) {
        return Err(Error::ScheduleOutOfRange { n, reason });
    }
    let zero = Vector::zeros(space.dim());
    let p = opts.fixed_point.as_ref().unwrap_or(&zero);
    space.check_dim(p)?;
    let radius = space.norm_of(&x0.sub(p).into_inner()).max(space.norm_of(&u.sub(p).into_inner()));
    let p_norm = space.norm_of(p.as_slice());
    let bound = GUARD_FACTOR * radius + p_norm + 1e-9 * (1.0 + p_norm);

    let mut steps = Vec::with_capacity(opts.max_iter.min(1 << 20));
    let mut x = x0.as_slice().to_vec();
    let mut n = 0;
    loop {
        let tx = t.eval_slice(&x);
        let residual = space.norm_of(&vector::sub(&x, &tx));
        let finish = |x: Vec<f64>, steps, converged| IterationTrace {
            u: u.clone(),
            steps,
            final_x: Vector::from_raw(x),
            final_residual: residual,
            converged,
        };
        if n == opts.max_iter {
            return Ok(finish(x, steps, false));
        }
        let params = s.at(n);
        let (_, next) = mann_update(&params, u.as_slice(), &x, &tx);
        if residual <= opts.residual_tol && space.norm_of(&vector::sub(&next, &x)) <= opts.residual_tol {
            return Ok(finish(x, steps, true));
        }
        let norm = space.norm_of(&next);
        if !(norm <= bound) {
            return Err(Error::Divergence {
                step: n + 1,
                norm,
                bound,
            });
        }
        steps.push(StepRecord {
            n,
            x: Vector::from_raw(core::mem::replace(&mut x, next)),
            residual,
            params,
        });
        n += 1;
    }
}
