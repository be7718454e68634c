//! The τ-sequence for error sequences that do not decrease at infinity:
//! `τ(n) = max{k ≤ n : Γ_k < Γ_{k+1}}`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TauAnalysis {
    /// First index at which an ascent `Γ_k < Γ_{k+1}` with `k ≤ n` exists.
    pub n0: usize,
    /// `τ(n)` for `n = n0, …, len − 1`.
    pub tau: Vec<usize>,
    pub nondecreasing: bool,
    /// `Γ_{τ(n)} ≤ Γ_{τ(n)+1}` for all `n ≥ n0`.
    pub ascent_estimate: bool,
    /// `Γ_n ≤ Γ_{τ(n)+1}` for all `n ≥ n0`.
    pub domination_estimate: bool,
}

impl TauAnalysis {
    pub fn tau_at(&self, n: usize) -> Option<usize> {
        n.checked_sub(self.n0).and_then(|i| self.tau.get(i)).copied()
    }

    pub fn all_pass(&self) -> bool {
        self.nondecreasing && self.ascent_estimate && self.domination_estimate
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "outcome", rename_all = "snake_case"))]
pub enum TauOutcome {
    /// No ascent at all: the sequence is nonincreasing (Case 1).
    Monotone,
    Analysis(TauAnalysis),
}

/// Computes `τ` and verifies both estimates on the finite sequence.
pub fn mainge_tau(gamma: &[f64]) -> Result<TauOutcome> {
    if gamma.len() < 2 {
        return Err(Error::InvalidParameter("sequence needs at least two terms".into()));
    }
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParameter("sequence has non-finite terms".into()));
    }
    let len = gamma.len();
    let mut last: Option<usize> = None;
    let mut n0 = None;
    let mut tau = Vec::new();
    for n in 0..len {
        if n + 1 < len && gamma[n] < gamma[n + 1] {
            last = Some(n);
        }
        if let Some(k) = last {
            n0.get_or_insert(n);
            tau.push(k);
        }
    }
    let Some(n0) = n0 else {
        return Ok(TauOutcome::Monotone);
    };
    let nondecreasing = tau.windows(2).all(|w| w[0] <= w[1]);
    let ascent_estimate = tau.iter().all(|&k| gamma[k] <= gamma[k + 1]);
    let domination_estimate = tau
        .iter()
        .enumerate()
        .all(|(i, &k)| gamma[n0 + i] <= gamma[k + 1]);
    Ok(TauOutcome::Analysis(TauAnalysis {
        n0,
        tau,
        nondecreasing,
        ascent_estimate,
        domination_estimate,
    }))
}
