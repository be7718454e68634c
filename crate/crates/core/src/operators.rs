//! λ-strict pseudocontractions: a gallery of test operators, sampled
//! certification of the defining inequality, averaged maps `T_α`, and
//! fixed-point oracles.
//!
//! Every operator is defined on the whole space, which is trivially closed,
//! convex and mapped into itself.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sampling::{self, streams};
use crate::space::{NormKind, Space};
use crate::tolerance::Tolerances;
use crate::vector::{self, Vector};

/// Half-width of the default sampling box `[-10, 10]^dim`.
pub const DEFAULT_BOX: f64 = 10.0;
pub const DEFAULT_PAIRS: usize = 1000;

/// Gallery names accepted by [`Operator::gallery`].
pub const GALLERY: [&str; 6] = [
    "identity",
    "constant_zero",
    "negation",
    "diagonal",
    "affine",
    "clipped_quadratic",
];

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    ConstantZero,
    Negation,
    /// `x ↦ diag(μ) x`.
    Diagonal { mu: Vec<f64> },
    /// `x ↦ A x + b`.
    Affine { a: Matrix, b: Vec<f64> },
    /// Coordinatewise `x_i ↦ x_i − gain · h(x_i − center)` with
    /// `h(s) = sign(s) · min(s², radius²)`. Nonlinear; difference quotients
    /// lie in `[1 − 2·gain·radius, 1]`.
    ClippedQuadratic { center: f64, radius: f64, gain: f64 },
}

/// Parameters for gallery construction. Unused fields are ignored by
/// operators that do not need them.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GalleryParams {
    pub mu: Option<Vec<f64>>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub center: Option<f64>,
    pub radius: Option<f64>,
    pub gain: Option<f64>,
}

/// Closed-form status of the strict-pseudocontraction property at a given λ.
#[derive(Debug, Clone, PartialEq)]
pub enum Admissibility {
    Proven,
    Refuted(String),
    /// No closed form available; sampling certification decides.
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    name: String,
    space: Space,
    kind: OperatorKind,
    lambda: Option<f64>,
}

impl Operator {
    /// Builds a gallery operator. When `lambda` is given it becomes the
    /// claimed constant, and construction fails if the closed-form analysis
    /// refutes it.
    pub fn gallery(name: &str, space: &Space, params: &GalleryParams, lambda: Option<f64>) -> Result<Self> {
        let dim = space.dim();
        let kind = match name {
            "identity" => OperatorKind::Identity,
            "constant_zero" => OperatorKind::ConstantZero,
            "negation" => OperatorKind::Negation,
            "diagonal" => {
                let mu = params
                    .mu
                    .clone()
                    .ok_or_else(|| Error::InvalidParameter("diagonal requires `mu`".into()))?;
                if mu.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: mu.len(),
                    });
                }
                finite_params(&mu)?;
                OperatorKind::Diagonal { mu }
            }
            "affine" => {
                let rows = params
                    .a
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("affine requires `a`".into()))?;
                let a = Matrix::from_rows(rows)?;
                if a.rows() != dim || a.cols() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "affine `a` must be {dim}x{dim}, got {}x{}",
                        a.rows(),
                        a.cols()
                    )));
                }
                let b = params.b.clone().unwrap_or_else(|| alloc::vec![0.0; dim]);
                if b.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: b.len(),
                    });
                }
                finite_params(&b)?;
                OperatorKind::Affine { a, b }
            }
            "clipped_quadratic" => {
                let center = params.center.unwrap_or(0.0);
                let radius = params.radius.unwrap_or(1.0);
                let gain = params.gain.unwrap_or(0.5);
                finite_params(&[center, radius, gain])?;
                if radius <= 0.0 || gain < 0.0 {
                    return Err(Error::InvalidParameter(
                        "clipped_quadratic needs radius > 0 and gain >= 0".into(),
                    ));
                }
                OperatorKind::ClippedQuadratic {
                    center,
                    radius,
                    gain,
                }
            }
            other => return Err(Error::UnknownOperator(other.to_string())),
        };
        let op = Self {
            name: name.to_string(),
            space: space.clone(),
            kind,
            lambda: None,
        };
        match lambda {
            Some(l) => op.with_claim(l),
            None => Ok(op),
        }
    }

    /// Sets the claimed λ after checking it against the closed form.
    pub fn with_claim(mut self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if let Admissibility::Refuted(reason) = self.admissibility(lambda) {
            return Err(Error::Inadmissible {
                name: self.name.clone(),
                lambda,
                reason,
            });
        }
        self.lambda = Some(lambda);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    fn claimed_lambda(&self) -> Result<f64> {
        self.lambda.ok_or_else(|| {
            Error::InvalidParameter(format!("operator `{}` carries no claimed lambda", self.name))
        })
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        self.space.check_dim(x)?;
        Ok(Vector::from_raw(self.eval_slice(x.as_slice())))
    }

    pub(crate) fn eval_slice(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            OperatorKind::Identity => x.to_vec(),
            OperatorKind::ConstantZero => alloc::vec![0.0; x.len()],
            OperatorKind::Negation => x.iter().map(|v| -v).collect(),
            OperatorKind::Diagonal { mu } => x.iter().zip(mu).map(|(v, m)| m * v).collect(),
            OperatorKind::Affine { a, b } => a.mul_vec(x).into_iter().zip(b).map(|(v, c)| v + c).collect(),
            OperatorKind::ClippedQuadratic {
                center,
                radius,
                gain,
            } => x
                .iter()
                .map(|&v| {
                    let s = v - center;
                    let h = (s * s).min(radius * radius);
                    v - gain * if s < 0.0 { -h } else { h }
                })
                .collect(),
        }
    }

    /// `(A, b)` with `T(x) = A x + b`, when the operator is affine.
    pub fn linear_rep(&self) -> Option<(Matrix, Vec<f64>)> {
        let n = self.space.dim();
        let zero = alloc::vec![0.0; n];
        match &self.kind {
            OperatorKind::Identity => Some((Matrix::identity(n), zero)),
            OperatorKind::ConstantZero => Some((Matrix::zeros(n, n), zero)),
            OperatorKind::Negation => Some((Matrix::identity(n).shifted(-1.0, 0.0), zero)),
            OperatorKind::Diagonal { mu } => Some((Matrix::diagonal(mu), zero)),
            OperatorKind::Affine { a, b } => Some((a.clone(), b.clone())),
            OperatorKind::ClippedQuadratic { .. } => None,
        }
    }

    /// Closed-form admissibility at `lambda`.
    ///
    /// Scalar multiples of the identity satisfy the defining inequality in
    /// any space iff `μ ≤ 1 − λ(1 − μ)²`. Symmetric diagonal and separable
    /// maps reduce to the same scalar condition per coordinate, but only in
    /// the euclidean norm; elsewhere they are left to sampling.
    pub fn admissibility(&self, lambda: f64) -> Admissibility {
        let euclidean = matches!(self.space.kind(), NormKind::Euclidean)
            || matches!(self.space.kind(), NormKind::Lp { p } if p == 2.0);
        let scalar = |mu: f64| -> Admissibility {
            if scalar_admissible(mu, lambda) {
                Admissibility::Proven
            } else {
                Admissibility::Refuted(format!(
                    "eigenvalue {mu} outside [{}, 1]",
                    -(1.0 - lambda) / lambda
                ))
            }
        };
        match &self.kind {
            OperatorKind::Identity => scalar(1.0),
            OperatorKind::ConstantZero => scalar(0.0),
            OperatorKind::Negation => scalar(-1.0),
            OperatorKind::Diagonal { mu } if euclidean => {
                match mu.iter().find(|&&m| !scalar_admissible(m, lambda)) {
                    Some(&m) => scalar(m),
                    None => Admissibility::Proven,
                }
            }
            OperatorKind::Affine { a, .. } if euclidean && is_diagonal(a) => {
                let n = a.rows();
                match (0..n).map(|i| a.get(i, i)).find(|&m| !scalar_admissible(m, lambda)) {
                    Some(m) => scalar(m),
                    None => Admissibility::Proven,
                }
            }
            OperatorKind::ClippedQuadratic { radius, gain, .. } if euclidean => {
                let steepest = 1.0 - 2.0 * gain * radius;
                scalar(steepest)
            }
            _ => Admissibility::Empirical,
        }
    }

    /// The fixed-point set `F(T)`: solved from `(A − I)x = −b` for affine
    /// operators, or the stored closed form for nonlinear ones.
    pub fn fixed_points_oracle(&self) -> Result<FixedSet> {
        let n = self.space.dim();
        if let OperatorKind::ClippedQuadratic { center, gain, .. } = self.kind {
            if gain == 0.0 {
                return Ok(FixedSet::whole_space(n));
            }
            return Ok(FixedSet {
                offset: Vector::filled(n, center),
                basis: Vec::new(),
            });
        }
        let (a, b) = self
            .linear_rep()
            .ok_or_else(|| Error::NoRepresentation(self.name.clone()))?;
        let system = a.shifted(1.0, -1.0);
        let rhs: Vec<f64> = b.iter().map(|v| -v).collect();
        let (particular, basis) = system
            .affine_solution_set(&rhs)
            .ok_or(Error::EmptyFixedSet)?;
        Ok(FixedSet {
            offset: Vector::from_raw(particular),
            basis: basis.into_iter().map(Vector::from_raw).collect(),
        })
    }
}

fn is_diagonal(a: &Matrix) -> bool {
    (0..a.rows()).all(|i| (0..a.cols()).all(|j| i == j || a.get(i, j) == 0.0))
}

fn finite_params(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter("non-finite operator parameter".into()))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )))
    }
}

/// `μ ≤ 1 − λ(1 − μ)²`, equivalently `μ ∈ [−(1−λ)/λ, 1]`.
pub fn scalar_admissible(mu: f64, lambda: f64) -> bool {
    mu <= 1.0 - lambda * (1.0 - mu) * (1.0 - mu) + 1e-12
}

/// An affine subset `offset + span(basis)` of the space.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedSet {
    pub offset: Vector,
    pub basis: Vec<Vector>,
}

impl FixedSet {
    pub fn whole_space(dim: usize) -> Self {
        Self {
            offset: Vector::zeros(dim),
            basis: (0..dim).map(|i| Vector::basis(dim, i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn is_whole_space(&self) -> bool {
        self.basis.len() == self.dim()
    }

    pub fn is_point(&self) -> bool {
        self.basis.is_empty()
    }

    fn orthonormal_basis(&self) -> Vec<Vec<f64>> {
        let mut q: Vec<Vec<f64>> = Vec::new();
        for b in &self.basis {
            let mut v = b.as_slice().to_vec();
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for e in &q {
                    let c = vector::dot(&v, e);
                    v.iter_mut().zip(e).for_each(|(vi, ei)| *vi -= c * ei);
                }
            }
            let n = libm::sqrt(vector::dot(&v, &v));
            if n > 1e-12 {
                q.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        q
    }

    /// Nearest point to `u` in the euclidean norm.
    pub fn project_euclidean(&self, u: &Vector) -> Result<Vector> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.dim(),
            });
        }
        let mut out = self.offset.as_slice().to_vec();
        let rel = vector::sub(u.as_slice(), self.offset.as_slice());
        for e in self.orthonormal_basis() {
            let c = vector::dot(&rel, &e);
            out.iter_mut().zip(&e).for_each(|(o, ei)| *o += c * ei);
        }
        Ok(Vector::from_raw(out))
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &Vector) -> Result<f64> {
        let p = self.project_euclidean(x)?;
        let d = x.sub(&p);
        Ok(libm::sqrt(d.dot(&d)))
    }
}

/// `T_α = (1 − α)I + αT`.
#[derive(Debug, Clone, Copy)]
pub struct AveragedMap<'a> {
    base: &'a Operator,
    alpha: f64,
}

impl<'a> AveragedMap<'a> {
    pub fn new(base: &'a Operator, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(Self { base, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> &Operator {
        self.base
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        self.base.space.check_dim(x)?;
        Ok(Vector::from_raw(self.eval_slice(x.as_slice())))
    }

    pub(crate) fn eval_slice(&self, x: &[f64]) -> Vec<f64> {
        averaged_point(self.alpha, x, &self.base.eval_slice(x))
    }
}

/// `(1 − α)x + α·tx`, coordinatewise.
pub(crate) fn averaged_point(alpha: f64, x: &[f64], tx: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(tx)
        .map(|(xi, ti)| alpha * ti + (1.0 - alpha) * xi)
        .collect()
}

pub fn averaged(t: &Operator, alpha: f64) -> Result<AveragedMap<'_>> {
    AveragedMap::new(t, alpha)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Certified,
    Refuted {
        x: Vector,
        y: Vector,
        slack: f64,
    },
}

/// Result of sampling the strict-pseudocontraction inequality
/// `⟨Tx−Ty, J(x−y)⟩ ≤ ‖x−y‖² − λ‖x−y−(Tx−Ty)‖²`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Certificate {
    pub operator: String,
    pub lambda_tested: f64,
    pub n_pairs: usize,
    pub seed: u64,
    pub sampling_box: f64,
    /// `max(0, −min slack)` over the sampled pairs.
    pub max_violation: f64,
    /// Largest `‖Tx−Ty‖ / ‖x−y‖` seen.
    pub max_lipschitz_ratio: f64,
    /// `(λ + 1) / λ`.
    pub lipschitz_bound: f64,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self.verdict, Verdict::Certified)
    }
}

pub fn certify(t: &Operator, lambda: f64, n_pairs: usize, seed: u64, sampling_box: f64) -> Result<Certificate> {
    certify_with(t, lambda, n_pairs, seed, sampling_box, &Tolerances::default())
}

pub fn certify_with(
    t: &Operator,
    lambda: f64,
    n_pairs: usize,
    seed: u64,
    sampling_box: f64,
    tol: &Tolerances,
) -> Result<Certificate> {
    check_lambda(lambda)?;
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("n_pairs must be at least 1".into()));
    }
    if !(sampling_box.is_finite() && sampling_box > 0.0) {
        return Err(Error::InvalidParameter("sampling box must be positive".into()));
    }
    let space = &t.space;
    let dim = space.dim();
    let mut rng = sampling::rng(seed, streams::CERTIFY);
    let mut min_slack = f64::INFINITY;
    let mut max_ratio = 0.0_f64;
    // worst (most negative relative to tolerance) violating pair
    let mut witness: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
    for _ in 0..n_pairs {
        let x = sampling::uniform_box(&mut rng, dim, sampling_box);
        let y = sampling::uniform_box(&mut rng, dim, sampling_box);
        let d = vector::sub(&x, &y);
        let e = vector::sub(&t.eval_slice(&x), &t.eval_slice(&y));
        let w = vector::sub(&d, &e);
        let d2 = space.norm_sq_of(&d);
        let pair = space.pairing_of(&e, &d);
        let penalty = lambda * space.norm_sq_of(&w);
        let slack = d2 - penalty - pair;
        min_slack = min_slack.min(slack);
        let nd = space.norm_of(&d);
        if nd > 0.0 {
            max_ratio = max_ratio.max(space.norm_of(&e) / nd);
        }
        let floor = tol.slack_floor(d2.max(pair.abs() + penalty));
        if slack < floor {
            let excess = floor - slack;
            if witness.as_ref().is_none_or(|w| excess > w.3) {
                witness = Some((x, y, slack, excess));
            }
        }
    }
    let verdict = match witness {
        Some((x, y, slack, _)) => Verdict::Refuted {
            x: Vector::from_raw(x),
            y: Vector::from_raw(y),
            slack,
        },
        None => Verdict::Certified,
    };
    Ok(Certificate {
        operator: t.name.clone(),
        lambda_tested: lambda,
        n_pairs,
        seed,
        sampling_box,
        max_violation: (-min_slack).max(0.0),
        max_lipschitz_ratio: max_ratio,
        lipschitz_bound: (lambda + 1.0) / lambda,
        verdict,
    })
}

/// Sampled check of `‖T_αx − T_αy‖² ≤ ‖x−y‖² − 2α(λ − K²α)‖Tx−Ty−(x−y)‖²`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lemma21Report {
    pub alpha: f64,
    pub lambda: f64,
    pub k2: f64,
    pub n_pairs: usize,
    pub min_slack: f64,
    pub max_violation: f64,
    pub violations: usize,
    /// `min (‖x−y‖ − ‖T_αx − T_αy‖)`, reported when `α ≤ min{1, λ/K²}`.
    pub nonexpansive_margin: Option<f64>,
}

pub fn check_lemma21(t: &Operator, alpha: f64, n_pairs: usize, seed: u64) -> Result<Lemma21Report> {
    check_lemma21_with(t, alpha, n_pairs, seed, DEFAULT_BOX, &Tolerances::default())
}

pub fn check_lemma21_with(
    t: &Operator,
    alpha: f64,
    n_pairs: usize,
    seed: u64,
    sampling_box: f64,
    tol: &Tolerances,
) -> Result<Lemma21Report> {
    let lambda = t.claimed_lambda()?;
    AveragedMap::new(t, alpha)?;
    let space = &t.space;
    let k2 = space.k2();
    let dim = space.dim();
    let coeff = 2.0 * alpha * (lambda - k2 * alpha);
    let track_margin = alpha <= space.mu(lambda);
    let mut rng = sampling::rng(seed, streams::LEMMA21);
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for _ in 0..n_pairs {
        let x = sampling::uniform_box(&mut rng, dim, sampling_box);
        let y = sampling::uniform_box(&mut rng, dim, sampling_box);
        let tx = t.eval_slice(&x);
        let ty = t.eval_slice(&y);
        let d = vector::sub(&x, &y);
        let w: Vec<f64> = tx
            .iter()
            .zip(&ty)
            .zip(&d)
            .map(|((a, b), di)| (a - b) - di)
            .collect();
        let avg_d = vector::sub(&averaged_point(alpha, &x, &tx), &averaged_point(alpha, &y, &ty));
        let lhs = space.norm_sq_of(&avg_d);
        let d2 = space.norm_sq_of(&d);
        let rhs = d2 - coeff * space.norm_sq_of(&w);
        let slack = rhs - lhs;
        min_slack = min_slack.min(slack);
        if !tol.slack_ok(slack, lhs.max(d2)) {
            violations += 1;
        }
        if track_margin {
            margin = margin.min(space.norm_of(&d) - space.norm_of(&avg_d));
        }
    }
    Ok(Lemma21Report {
        alpha,
        lambda,
        k2,
        n_pairs,
        min_slack,
        max_violation: (-min_slack).max(0.0),
        violations,
        nonexpansive_margin: track_margin.then_some(margin),
    })
}
