//! Simulation of the scalar recursion `a_{n+1} = (1 − t_n) a_n + t_n c_n`,
//! the equality case of the bound that drives `a_n → 0` when `∑ t_n = ∞`
//! and `limsup c_n ≤ 0`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::schedules::Sequence;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecursionTrajectory {
    /// `a_0, …, a_horizon`.
    pub a: Vec<f64>,
    /// `∑ t_n = ∞`, when decidable in closed form.
    pub t_series_diverges: Option<bool>,
    /// `limsup c_n ≤ 0`, when decidable in closed form.
    pub c_limsup_nonpositive: Option<bool>,
}

impl RecursionTrajectory {
    pub fn last(&self) -> f64 {
        *self.a.last().expect("trajectory holds a_0")
    }

    /// First `n` with `a_n < eps`.
    pub fn first_below(&self, eps: f64) -> Option<usize> {
        self.a.iter().position(|&v| v < eps)
    }
}

pub fn lemma22_harness(t_seq: &Sequence, c_seq: &Sequence, a0: f64, horizon: usize) -> Result<RecursionTrajectory> {
    t_seq.validate()?;
    c_seq.validate()?;
    if !(a0.is_finite() && a0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("a0 must be nonnegative, got {a0}")));
    }
    let mut a = Vec::with_capacity(horizon + 1);
    a.push(a0);
    let mut cur = a0;
    for n in 0..horizon {
        let t = t_seq.eval(n);
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ScheduleOutOfRange {
                n,
                reason: format!("t_n = {t} outside [0, 1]"),
            });
        }
        cur = (1.0 - t) * cur + t * c_seq.eval(n);
        a.push(cur);
    }
    Ok(RecursionTrajectory {
        a,
        t_series_diverges: t_seq.series_diverges(),
        c_limsup_nonpositive: c_seq.limit().map(|l| l <= 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_step_annihilates() {
        let r = lemma22_harness(&Sequence::Constant { c: 1.0 }, &Sequence::Constant { c: 1e-12 }, 5.0, 1).unwrap();
        assert!(r.a[1] <= 1e-12);
    }

    #[test]
    fn harmonic_pair_decays() {
        let r = lemma22_harness(&Sequence::Harmonic, &Sequence::Harmonic, 1.0, 10_000).unwrap();
        assert!(r.last() < 1e-2);
        // n a_n = H_n for n ≥ 1 (by induction), so a_n = H_n / n
        for n in [1usize, 10, 100, 10_000] {
            let h: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
            assert!((r.a[n] - h / n as f64).abs() < 1e-12, "n={n}");
        }
        assert_eq!(r.t_series_diverges, Some(true));
        assert_eq!(r.c_limsup_nonpositive, Some(true));
    }

    #[test]
    fn positive_limsup_stalls() {
        let r = lemma22_harness(&Sequence::Harmonic, &Sequence::Constant { c: 0.1 }, 1.0, 10_000).unwrap();
        assert!((r.last() - 0.1).abs() < 1e-3);
        assert_eq!(r.c_limsup_nonpositive, Some(false));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(lemma22_harness(&Sequence::Constant { c: 1.5 }, &Sequence::Zero, 1.0, 3).is_err());
        assert!(lemma22_harness(&Sequence::Harmonic, &Sequence::Zero, -1.0, 3).is_err());
    }
}
