//! Finite-dimensional smooth normed spaces.
//!
//! Two norm families are built in: the euclidean norm and the p-norm with
//! `p >= 2`. Both are 2-uniformly smooth. The normalized duality mapping is
//! single-valued on these spaces, so `J` is an ordinary function.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sampling::{self, streams};
use crate::tolerance::Tolerances;
use crate::vector::{self, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NormKind {
    Euclidean,
    Lp { p: f64 },
}

/// A real finite-dimensional normed space with its smoothness constants.
///
/// `k2` is the square of the 2-uniform-smoothness constant `K` in the
/// two-point inequality `‖x+y‖² ≤ ‖x‖² + 2⟨y, J(x)⟩ + 2K²‖y‖²`. The pair
/// `(q, cq)` feeds only the q-uniform-smoothness condition checker.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Space {
    dim: usize,
    kind: NormKind,
    k2: f64,
    q: f64,
    cq: f64,
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dim must be at least 1".into()));
        }
        Ok(Self {
            dim,
            kind: NormKind::Euclidean,
            k2: 0.5,
            q: 2.0,
            cq: 1.0,
        })
    }

    /// `R^dim` with the p-norm, `p >= 2`; default `K² = (p - 1) / 2`.
    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dim must be at least 1".into()));
        }
        if !(p.is_finite() && p >= 2.0) {
            return Err(Error::InvalidSpace(alloc::format!(
                "p-norm requires finite p >= 2, got {p}"
            )));
        }
        let k2 = (p - 1.0) / 2.0;
        Ok(Self {
            dim,
            kind: NormKind::Lp { p },
            k2,
            q: 2.0,
            cq: 2.0 * k2,
        })
    }

    /// Overrides `K²`. `cq` follows as `2K²` unless set later.
    pub fn with_k2(mut self, k2: f64) -> Result<Self> {
        if !(k2.is_finite() && k2 > 0.0) {
            return Err(Error::InvalidSpace(alloc::format!(
                "K2 must be positive, got {k2}"
            )));
        }
        self.k2 = k2;
        self.cq = 2.0 * k2;
        Ok(self)
    }

    pub fn with_q_constant(mut self, q: f64, cq: f64) -> Result<Self> {
        if !(q > 1.0 && q <= 2.0) {
            return Err(Error::InvalidSpace(alloc::format!(
                "smoothness order q must lie in (1, 2], got {q}"
            )));
        }
        if !(cq.is_finite() && cq > 0.0) {
            return Err(Error::InvalidSpace(alloc::format!(
                "Cq must be positive, got {cq}"
            )));
        }
        self.q = q;
        self.cq = cq;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn cq(&self) -> f64 {
        self.cq
    }

    /// `min{1, λ/K²}`, the largest step for which `T_α` is nonexpansive.
    pub fn mu(&self, lambda: f64) -> f64 {
        (lambda / self.k2).min(1.0)
    }

    /// Exponent of the dual norm.
    pub fn dual_exponent(&self) -> f64 {
        match self.kind {
            NormKind::Euclidean => 2.0,
            NormKind::Lp { p } => p / (p - 1.0),
        }
    }

    pub fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.norm_of(x.as_slice()))
    }

    pub fn duality_map(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(Vector::from_raw(self.duality_of(x.as_slice())))
    }

    /// `⟨y, J(x)⟩`.
    pub fn pairing(&self, y: &Vector, x: &Vector) -> Result<f64> {
        self.check_dim(y)?;
        self.check_dim(x)?;
        Ok(self.pairing_of(y.as_slice(), x.as_slice()))
    }

    /// Norm of a functional, given by its coordinates, in the dual space.
    pub fn dual_norm(&self, f: &Vector) -> Result<f64> {
        self.check_dim(f)?;
        Ok(match self.kind {
            NormKind::Euclidean => euclidean(f.as_slice()),
            NormKind::Lp { p } => p_norm(f.as_slice(), p / (p - 1.0)),
        })
    }

    pub(crate) fn norm_of(&self, x: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => euclidean(x),
            NormKind::Lp { p } => p_norm(x, p),
        }
    }

    /// `‖x‖²`, computed so that it agrees bit-for-bit with `pairing_of(x, x)`
    /// in the euclidean case.
    pub(crate) fn norm_sq_of(&self, x: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => vector::dot(x, x),
            NormKind::Lp { p } => sq(p_norm(x, p)),
        }
    }

    pub(crate) fn duality_of(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            NormKind::Euclidean | NormKind::Lp { p: 2.0 } => x.to_vec(),
            NormKind::Lp { p } => {
                let n = p_norm(x, p);
                if n == 0.0 {
                    return alloc::vec![0.0; x.len()];
                }
                // ‖x‖^{2-p} |x_i|^{p-1} sign(x_i), arranged to avoid overflow
                x.iter()
                    .map(|&xi| n * libm::pow(xi.abs() / n, p - 1.0) * sign(xi))
                    .collect()
            }
        }
    }

    pub(crate) fn pairing_of(&self, y: &[f64], x: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => vector::dot(y, x),
            NormKind::Lp { .. } => vector::dot(y, &self.duality_of(x)),
        }
    }

    /// Sampled lower estimate of the modulus of smoothness
    /// `ρ(t) = sup{½(‖x+y‖ + ‖x−y‖) − 1 : ‖x‖ = 1, ‖y‖ ≤ t}`.
    ///
    /// The samples (a unit `x` and a unit direction `d`, with `y = t·d`) depend
    /// only on the seed, so for a fixed seed the estimate is nondecreasing in
    /// `t`.
    pub fn modulus_smoothness_estimate(&self, t: f64, n_samples: usize, seed: u64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "t must be a finite nonnegative real, got {t}"
            )));
        }
        if n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let mut rng = sampling::rng(seed, streams::SMOOTHNESS_MODULUS);
        let mut best = 0.0_f64;
        let mut plus = alloc::vec![0.0; self.dim];
        let mut minus = alloc::vec![0.0; self.dim];
        for _ in 0..n_samples {
            let x = self.unit_sample(&mut rng);
            let d = self.unit_sample(&mut rng);
            for i in 0..self.dim {
                plus[i] = x[i] + t * d[i];
                minus[i] = x[i] - t * d[i];
            }
            let v = 0.5 * (self.norm_of(&plus) + self.norm_of(&minus)) - 1.0;
            best = best.max(v);
        }
        Ok(best)
    }

    /// Samples pairs `(x, y)` and checks the two-point smoothness inequality
    /// `‖x+y‖² ≤ ‖x‖² + 2⟨y, J(x)⟩ + 2K²‖y‖²`.
    pub fn validate_smooth_constant(&self, n_samples: usize, seed: u64) -> Result<SmoothConstantReport> {
        self.validate_smooth_constant_with(n_samples, seed, &Tolerances::default())
    }

    pub fn validate_smooth_constant_with(
        &self,
        n_samples: usize,
        seed: u64,
        tol: &Tolerances,
    ) -> Result<SmoothConstantReport> {
        if n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        let mut rng = sampling::rng(seed, streams::SMOOTH_CONSTANT);
        let mut max_violation = 0.0_f64;
        let mut violations = 0;
        let mut empirical_k2 = 0.0_f64;
        let mut xy = alloc::vec![0.0; self.dim];
        for _ in 0..n_samples {
            let x = sampling::gaussian_vec(&mut rng, self.dim);
            // spread |y|/|x| over four decades
            let scale = libm::pow(10.0, rand::Rng::gen_range(&mut rng, -3.0..1.0));
            let y: Vec<f64> = sampling::gaussian_vec(&mut rng, self.dim)
                .into_iter()
                .map(|v| v * scale)
                .collect();
            for i in 0..self.dim {
                xy[i] = x[i] + y[i];
            }
            let lhs = sq(self.norm_of(&xy));
            let nx2 = sq(self.norm_of(&x));
            let ny2 = sq(self.norm_of(&y));
            let linear = nx2 + 2.0 * self.pairing_of(&y, &x);
            let rhs = linear + 2.0 * self.k2 * ny2;
            let excess = lhs - rhs;
            if ny2 > 0.0 {
                empirical_k2 = empirical_k2.max((lhs - linear) / (2.0 * ny2));
            }
            max_violation = max_violation.max(excess);
            if !tol.slack_ok(-excess, lhs.max(rhs)) {
                violations += 1;
            }
        }
        Ok(SmoothConstantReport {
            k2: self.k2,
            n_samples,
            max_violation,
            violations,
            empirical_k2,
        })
    }

    fn unit_sample(&self, rng: &mut sampling::SampleRng) -> Vec<f64> {
        loop {
            let g = sampling::gaussian_vec(rng, self.dim);
            let n = self.norm_of(&g);
            if n > 0.0 {
                return g.into_iter().map(|v| v / n).collect();
            }
        }
    }
}

/// Outcome of sampling the two-point smoothness inequality.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothConstantReport {
    pub k2: f64,
    pub n_samples: usize,
    /// Largest `LHS − RHS` seen, floored at zero.
    pub max_violation: f64,
    /// Samples whose excess exceeds the slack tolerance.
    pub violations: usize,
    /// `max (‖x+y‖² − ‖x‖² − 2⟨y,J(x)⟩) / (2‖y‖²)` over the samples.
    pub empirical_k2: f64,
}

fn sq(v: f64) -> f64 {
    v * v
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn euclidean(x: &[f64]) -> f64 {
    libm::sqrt(vector::dot(x, x))
}

fn p_norm(x: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return euclidean(x);
    }
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| libm::pow(v.abs() / m, p)).sum();
    m * libm::pow(s, 1.0 / p)
}
