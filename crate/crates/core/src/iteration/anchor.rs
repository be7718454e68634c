//! The anchor path `x_t = t u + (1 − t) T x_t` and its limit as `t → 0`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::vector::{self, Vector};

/// Default decreasing grid `10^{-1}, …, 10^{-6}`.
pub const DEFAULT_T_GRID: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;
/// Largest allowed `‖x_{t_k} − x_{t_{k+1}}‖` at the end of the grid.
pub const CAUCHY_THRESHOLD: f64 = 1e-4;
/// Number of trailing grid points used for extrapolation to `t = 0`.
pub const EXTRAPOLATION_POINTS: usize = 4;

const MAX_DAMPED_ITERS: usize = 100_000_000;
const MAX_HALVINGS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolveMethod {
    Direct,
    Damped { iterations: usize, damping: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnchorPath {
    pub t: f64,
    pub x_t: Vector,
    /// `‖x_t − (t u + (1 − t) T x_t)‖`.
    pub solver_residual: f64,
    pub method: SolveMethod,
}

fn anchor_residual(t_op: &Operator, u: &[f64], t: f64, x: &[f64]) -> f64 {
    let g = anchor_map(t_op, u, t, x);
    t_op.space().norm_of(&vector::sub(x, &g))
}

fn anchor_map(t_op: &Operator, u: &[f64], t: f64, x: &[f64]) -> Vec<f64> {
    t_op.eval_slice(x)
        .iter()
        .zip(u)
        .map(|(tx, ui)| t * ui + (1.0 - t) * tx)
        .collect()
}

pub fn anchor_solve(t_op: &Operator, u: &Vector, t: f64, tol: f64) -> Result<AnchorPath> {
    anchor_solve_from(t_op, u, t, tol, None)
}

/// Solves the anchor equation at `t`.
///
/// Affine operators go through the linear system
/// `(I − (1 − t)A) x = t u + (1 − t) b`. Other operators use the damped
/// iteration `z ← (1 − s) z + s (t u + (1 − t) T z)` from `start` (or `u`),
/// with `s = min{1, λ/K²}`: the damped map equals `(1 − st)` times an averaged
/// map of `T` that is nonexpansive, so it contracts with factor `1 − st`.
/// The damping is halved on nonconvergence, up to six times.
pub fn anchor_solve_from(
    t_op: &Operator,
    u: &Vector,
    t: f64,
    tol: f64,
    start: Option<&Vector>,
) -> Result<AnchorPath> {
    let space = t_op.space();
    space.check_dim(u)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("t must lie in (0, 1), got {t}")));
    }
    if let Some((a, b)) = t_op.linear_rep() {
        // t I + (1 − t)(I − A) keeps the t-sized pivots exact when A has
        // eigenvalue one
        let system = a.shifted(-1.0, 1.0).shifted(1.0 - t, t);
        let rhs: Vec<f64> = u
            .as_slice()
            .iter()
            .zip(&b)
            .map(|(ui, bi)| t * ui + (1.0 - t) * bi)
            .collect();
        let x = system.solve(&rhs)?;
        let solver_residual = anchor_residual(t_op, u.as_slice(), t, &x);
        return Ok(AnchorPath {
            t,
            x_t: Vector::from_raw(x),
            solver_residual,
            method: SolveMethod::Direct,
        });
    }

    let lambda = t_op.lambda().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "operator `{}` needs a claimed lambda for the damped anchor solver",
            t_op.name()
        ))
    })?;
    let mut damping = space.mu(lambda);
    let init = start.unwrap_or(u);
    space.check_dim(init)?;
    let mut last_residual = f64::INFINITY;
    for _ in 0..=MAX_HALVINGS {
        let cap = (libm::ceil(60.0 / (damping * t)) as usize).clamp(1000, MAX_DAMPED_ITERS);
        let mut z = init.as_slice().to_vec();
        for k in 0..cap {
            let g = anchor_map(t_op, u.as_slice(), t, &z);
            let r = space.norm_of(&vector::sub(&z, &g));
            if !r.is_finite() {
                break;
            }
            last_residual = r;
            if r <= tol {
                return Ok(AnchorPath {
                    t,
                    x_t: Vector::from_raw(z),
                    solver_residual: r,
                    method: SolveMethod::Damped {
                        iterations: k,
                        damping,
                    },
                });
            }
            z.iter_mut()
                .zip(&g)
                .for_each(|(zi, gi)| *zi = (1.0 - damping) * *zi + damping * gi);
        }
        damping *= 0.5;
    }
    Err(Error::AnchorNonConvergence {
        t,
        residual: last_residual,
    })
}

/// The designated limit point of the anchor path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnchorLimit {
    /// Polynomial extrapolation of the trailing grid points to `t = 0`.
    pub z: Vector,
    /// `x_t` at the smallest grid value.
    pub x_t_min: Vector,
    pub t_min: f64,
    pub path: Vec<AnchorPath>,
    /// `‖x_{t_k} − x_{t_{k+1}}‖` along the grid.
    pub increments: Vec<f64>,
    /// `‖z − x_{t_min}‖`, the size of the extrapolation correction.
    pub extrapolation_gap: f64,
}

/// Follows the anchor path along a decreasing grid and designates its limit.
///
/// The Cauchy check requires the successive increments to be nonincreasing
/// (up to rounding) and the last one to be at most [`CAUCHY_THRESHOLD`].
pub fn anchor_limit(t_op: &Operator, u: &Vector, t_grid: &[f64], tol: f64) -> Result<AnchorLimit> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("t_grid must not be empty".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("t_grid must be strictly decreasing".into()));
    }
    let space = t_op.space();
    let mut path: Vec<AnchorPath> = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let start = path.last().map(|p| p.x_t.clone());
        path.push(anchor_solve_from(t_op, u, t, tol, start.as_ref())?);
    }
    let increments: Vec<f64> = path
        .windows(2)
        .map(|w| space.norm_of(&vector::sub(w[0].x_t.as_slice(), w[1].x_t.as_slice())))
        .collect();
    let slack = 1e3 * tol.max(f64::EPSILON);
    if let Some(k) = increments.windows(2).position(|w| w[1] > w[0] + slack) {
        return Err(Error::CauchyCheck(format!(
            "increment grew from {:e} to {:e} at grid step {}",
            increments[k],
            increments[k + 1],
            k + 1
        )));
    }
    if let Some(&last) = increments.last() {
        if last > CAUCHY_THRESHOLD {
            return Err(Error::CauchyCheck(format!(
                "final increment {last:e} exceeds {CAUCHY_THRESHOLD:e}"
            )));
        }
    }
    let m = EXTRAPOLATION_POINTS.min(path.len());
    let tail = &path[path.len() - m..];
    let z = extrapolate_to_zero(tail);
    let last = path.last().expect("grid is nonempty");
    let extrapolation_gap = space.norm_of(&vector::sub(z.as_slice(), last.x_t.as_slice()));
    Ok(AnchorLimit {
        z,
        x_t_min: last.x_t.clone(),
        t_min: last.t,
        increments,
        extrapolation_gap,
        path,
    })
}

/// Neville's scheme evaluated at `t = 0`, coordinatewise.
fn extrapolate_to_zero(points: &[AnchorPath]) -> Vector {
    let dim = points[0].x_t.dim();
    let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    let coords = (0..dim)
        .map(|i| {
            let mut p: Vec<f64> = points.iter().map(|pt| pt.x_t[i]).collect();
            let m = p.len();
            for level in 1..m {
                for j in 0..m - level {
                    let (ta, tb) = (ts[j], ts[j + level]);
                    // interpolate between p[j] (nodes j..j+level-1) and p[j+1]
                    p[j] = (tb * p[j] - ta * p[j + 1]) / (tb - ta);
                }
            }
            p[0]
        })
        .collect();
    Vector::from_raw(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::GalleryParams;
    use crate::space::Space;
    use alloc::vec;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn diag(mu: &[f64]) -> Operator {
        Operator::gallery(
            "diagonal",
            &Space::euclidean(mu.len()).unwrap(),
            &GalleryParams {
                mu: Some(mu.to_vec()),
                ..Default::default()
            },
            None,
        )
        .unwrap()
    }

    #[test]
    fn negation_closed_form() {
        let neg = diag(&[-1.0, -1.0]);
        let u = v(&[3.0, -2.0]);
        for t in [0.9, 0.5, 0.1, 1e-4] {
            let a = anchor_solve(&neg, &u, t, 1e-12).unwrap();
            let expected = u.scale(t / (2.0 - t));
            assert!(a.x_t.max_abs_diff(&expected) < 1e-15);
            assert_eq!(a.method, SolveMethod::Direct);
        }
    }

    #[test]
    fn identity_path_is_anchor() {
        let id = diag(&[1.0, 1.0, 1.0]);
        let u = v(&[1.0, -4.0, 0.5]);
        let a = anchor_solve(&id, &u, 0.3, 1e-12).unwrap();
        assert!(a.x_t.max_abs_diff(&u) < 1e-15);
        let lim = anchor_limit(&id, &u, &DEFAULT_T_GRID, 1e-12).unwrap();
        assert!(lim.z.max_abs_diff(&u) < 1e-14);
    }

    #[test]
    fn diagonal_coordinatewise() {
        let d = diag(&[1.0, -1.0]);
        let t = 1e-3;
        let a = anchor_solve(&d, &v(&[1.0, 1.0]), t, 1e-12).unwrap();
        assert!(a.x_t.max_abs_diff(&v(&[1.0, t / (2.0 - t)])) < 1e-15);
        assert!((a.x_t[1] - 5.0025e-4).abs() < 1e-7);
    }

    #[test]
    fn limit_of_three_dim_diagonal() {
        let d = diag(&[1.0, -1.0, 0.5]);
        let u = v(&[1.0, 1.0, 1.0]);
        let lim = anchor_limit(&d, &u, &DEFAULT_T_GRID, 1e-12).unwrap();
        assert!(lim.z.max_abs_diff(&v(&[1.0, 0.0, 0.0])) < 1e-13, "{:?}", lim.z);
        // the raw grid endpoint is O(t_min) away
        assert!(lim.x_t_min.max_abs_diff(&v(&[1.0, 0.0, 0.0])) < 1e-5);
        assert!(lim.increments.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn damped_solver_for_nonlinear() {
        let space = Space::euclidean(2).unwrap();
        let op = Operator::gallery(
            "clipped_quadratic",
            &space,
            &GalleryParams {
                center: Some(0.5),
                ..Default::default()
            },
            Some(0.5),
        )
        .unwrap();
        let u = v(&[2.0, -1.0]);
        let a = anchor_solve(&op, &u, 0.1, 1e-12).unwrap();
        assert!(a.solver_residual <= 1e-12);
        assert!(matches!(a.method, SolveMethod::Damped { .. }));
        // T − I is flat at the fixed point, so x_t approaches it like √t and
        // the default grid fails the Cauchy check
        let near = anchor_solve(&op, &u, 1e-4, 1e-12).unwrap();
        assert!(near.x_t.max_abs_diff(&v(&[0.5, 0.5])) < 0.05);
        assert!(matches!(
            anchor_limit(&op, &u, &DEFAULT_T_GRID[..4], 1e-12),
            Err(Error::CauchyCheck(_))
        ));
    }

    #[test]
    fn bad_inputs() {
        let d = diag(&[1.0]);
        assert!(anchor_solve(&d, &v(&[1.0]), 0.0, 1e-12).is_err());
        assert!(anchor_solve(&d, &v(&[1.0]), 1.0, 1e-12).is_err());
        assert!(anchor_limit(&d, &v(&[1.0]), &[1e-2, 1e-1], 1e-12).is_err());
        assert!(anchor_limit(&d, &v(&[1.0]), &[], 1e-12).is_err());
    }

    #[test]
    fn translation_has_singular_anchor_system_only_at_t_zero() {
        // T(x) = x + 1 has no fixed point; the path runs off to infinity and
        // the Cauchy check refuses it
        let space = Space::euclidean(1).unwrap();
        let t = Operator::gallery(
            "affine",
            &space,
            &GalleryParams {
                a: Some(vec![vec![1.0]]),
                b: Some(vec![1.0]),
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert!(matches!(
            anchor_limit(&t, &v(&[0.0]), &DEFAULT_T_GRID, 1e-12),
            Err(Error::CauchyCheck(_))
        ));
    }
}
