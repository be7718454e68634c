//! Parameter sequences `(α_n, β_n, γ_n)` and validators for the convergence
//! conditions of the modified Mann iteration.
//!
//! Asymptotic conditions (liminf, limsup, series divergence) are decided
//! symbolically for closed-form sequences. Custom tables fall back to tail
//! heuristics over the last half of the horizon, and their verdicts are
//! labeled finite-horizon.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Fraction of the horizon treated as the tail by the finite-horizon heuristics.
pub const TAIL_FRACTION: f64 = 0.5;
/// Positive margin required by the tail heuristics.
pub const MARGIN_DELTA: f64 = 1e-3;
/// A table is judged to vanish when its last horizon value is below this.
pub const VANISH_EPS: f64 = 1e-2;
/// A table series is judged divergent when its tail sum reaches this.
pub const DIVERGENCE_TAIL_SUM: f64 = 0.1;

const SYMBOLIC: &str = "asymptotic condition verified symbolically";
const FINITE: &str = "asymptotic condition verified at finite horizon";

/// A parameter sequence indexed by `n ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum Sequence {
    Constant { c: f64 },
    /// `a / (n + 1)^b`.
    Power { a: f64, b: f64 },
    Zero,
    /// `1 / (n + 1)`.
    Harmonic,
    /// Explicit values; the last one repeats beyond the table.
    Table { values: Vec<f64> },
}

impl Sequence {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Sequence::Constant { c } => c.is_finite(),
            Sequence::Power { a, b } => a.is_finite() && b.is_finite(),
            Sequence::Zero | Sequence::Harmonic => true,
            Sequence::Table { values } => !values.is_empty() && values.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("malformed sequence {self:?}")))
        }
    }

    pub fn eval(&self, n: usize) -> f64 {
        match self {
            Sequence::Constant { c } => *c,
            Sequence::Power { a, b } => a / libm::pow((n + 1) as f64, *b),
            Sequence::Zero => 0.0,
            Sequence::Harmonic => 1.0 / (n + 1) as f64,
            Sequence::Table { values } => values[n.min(values.len() - 1)],
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Sequence::Table { .. })
    }

    /// Exact limit for closed forms (possibly infinite), `None` for tables.
    pub fn limit(&self) -> Option<f64> {
        match self {
            Sequence::Constant { c } => Some(*c),
            Sequence::Power { a, b } => Some(if *a == 0.0 || *b > 0.0 {
                0.0
            } else if *b == 0.0 {
                *a
            } else {
                a.signum() * f64::INFINITY
            }),
            Sequence::Zero | Sequence::Harmonic => Some(0.0),
            Sequence::Table { .. } => None,
        }
    }

    /// Whether `∑ s_n = ∞`, decided exactly for closed forms (p-series test).
    pub fn series_diverges(&self) -> Option<bool> {
        match self {
            Sequence::Constant { c } => Some(*c != 0.0),
            Sequence::Power { a, b } => Some(*a != 0.0 && *b <= 1.0),
            Sequence::Zero => Some(false),
            Sequence::Harmonic => Some(true),
            Sequence::Table { .. } => None,
        }
    }

    /// Whether `∑ |s_{n+1} − s_n| < ∞`. Closed forms are monotone, so this
    /// holds exactly when the limit is finite.
    pub fn variation_summable(&self) -> Option<bool> {
        self.limit().map(f64::is_finite)
    }

    /// Whether the sequence vanishes identically.
    pub fn is_identically_zero(&self) -> Option<bool> {
        match self {
            Sequence::Constant { c } => Some(*c == 0.0),
            Sequence::Power { a, .. } => Some(*a == 0.0),
            Sequence::Zero => Some(true),
            Sequence::Harmonic => Some(false),
            Sequence::Table { .. } => None,
        }
    }
}

/// The three parameter sequences of one iteration.
///
/// `offset` shifts the index: step `k` uses `α_{k+offset}`, `β_{k+offset}`,
/// `γ_{k+offset}`. Schedules such as `β_n = (n+1)^{-1/2}` with
/// `γ_n = 1/(n+1)` start inside the admissible region only after a few
/// indices.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ScheduleSet {
    pub alpha: Sequence,
    pub beta: Sequence,
    pub gamma: Sequence,
    #[cfg_attr(feature = "serde", serde(default))]
    pub offset: usize,
}

/// Parameters in effect at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ScheduleSet {
    pub fn new(alpha: Sequence, beta: Sequence, gamma: Sequence) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            offset: 0,
        }
    }

    pub fn with_offset(mut self, offset: usize) -> Self {
        self.offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        self.beta.validate()?;
        self.gamma.validate()
    }

    /// Parameters for step `k`.
    pub fn at(&self, k: usize) -> StepParams {
        let n = k + self.offset;
        StepParams {
            alpha: self.alpha.eval(n),
            beta: self.beta.eval(n),
            gamma: self.gamma.eval(n),
        }
    }

    fn indices(&self, horizon: usize) -> core::ops::Range<usize> {
        self.offset..self.offset + horizon
    }

    fn tail(&self, horizon: usize) -> core::ops::Range<usize> {
        let skip = ((horizon as f64) * (1.0 - TAIL_FRACTION)) as usize;
        self.offset + skip.min(horizon.saturating_sub(1))..self.offset + horizon
    }

    /// First step index in `[0, horizon)` violating `α ∈ [0,1]`, `β ∈ (0,1)`,
    /// `γ ∈ [0,1)` or `β + γ < 1`.
    pub fn first_range_violation(&self, horizon: usize) -> Option<(usize, String)> {
        (0..horizon).find_map(|k| {
            let p = self.at(k);
            let why = if !(0.0..=1.0).contains(&p.alpha) {
                format!("alpha = {} outside [0, 1]", p.alpha)
            } else if !(p.beta > 0.0 && p.beta < 1.0) {
                format!("beta = {} outside (0, 1)", p.beta)
            } else if !(p.gamma >= 0.0 && p.gamma < 1.0) {
                format!("gamma = {} outside [0, 1)", p.gamma)
            } else if p.beta + p.gamma >= 1.0 {
                format!("beta + gamma = {} not below 1", p.beta + p.gamma)
            } else {
                return None;
            };
            Some((k, why))
        })
    }
}

/// One checked condition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionVerdict {
    pub condition: String,
    pub pass: bool,
    pub margin: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerdictReport {
    pub theorem: String,
    pub horizon: usize,
    pub entries: Vec<ConditionVerdict>,
}

impl VerdictReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, condition: &str) -> Option<&ConditionVerdict> {
        self.entries.iter().find(|e| e.condition == condition)
    }

    pub fn passes(&self, condition: &str) -> bool {
        self.get(condition).is_some_and(|e| e.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionVerdict> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

fn verdict(condition: &str, pass: bool, margin: f64, note: impl Into<String>) -> ConditionVerdict {
    ConditionVerdict {
        condition: condition.to_string(),
        pass,
        margin,
        note: note.into(),
    }
}

fn check_horizon(horizon: usize, min: usize) -> Result<()> {
    if horizon < min {
        return Err(Error::InvalidParameter(format!("horizon must be at least {min}")));
    }
    Ok(())
}

fn range_entry(s: &ScheduleSet, horizon: usize) -> ConditionVerdict {
    let margin = (0..horizon)
        .map(|k| {
            let p = s.at(k);
            p.beta.min(1.0 - p.beta - p.gamma).min(if p.gamma < 0.0 { p.gamma } else { f64::INFINITY })
        })
        .fold(f64::INFINITY, f64::min);
    match s.first_range_violation(horizon) {
        None => verdict(
            "range",
            true,
            margin,
            "beta_n in (0,1), gamma_n in [0,1), beta_n + gamma_n < 1 over the horizon",
        ),
        Some((k, why)) => verdict(
            "range",
            false,
            margin,
            format!("step {k} (index {}): {why}", k + s.offset),
        ),
    }
}

fn inf_over(range: impl Iterator<Item = usize>, f: impl Fn(usize) -> f64) -> f64 {
    range.map(f).fold(f64::INFINITY, f64::min)
}

fn sup_over(range: impl Iterator<Item = usize>, f: impl Fn(usize) -> f64) -> f64 {
    range.map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Condition (i) with a generic margin function `g(α)`: `α_n ∈ [0, μ]` over
/// the horizon and `liminf g(α_n) > 0`.
fn alpha_margin_entry(s: &ScheduleSet, horizon: usize, mu: f64, g: impl Fn(f64) -> f64) -> ConditionVerdict {
    let seq = &s.alpha;
    let outside = s
        .indices(horizon)
        .find(|&n| !(0.0..=mu).contains(&seq.eval(n)));
    let zero_somewhere = s.indices(horizon).any(|n| seq.eval(n) == 0.0);
    let (liminf, symbolic) = match seq.limit() {
        Some(l) if l.is_finite() => (g(l), true),
        Some(_) => (f64::NEG_INFINITY, true),
        None => (inf_over(s.tail(horizon), |n| g(seq.eval(n))), false),
    };
    let margin_ok = if symbolic { liminf > 0.0 } else { liminf >= MARGIN_DELTA };
    let mut note = String::from(if symbolic { SYMBOLIC } else { FINITE });
    if let Some(n) = outside {
        note = format!("alpha_{n} = {} outside [0, mu = {mu}]; {note}", seq.eval(n));
    }
    if zero_somewhere {
        note.push_str("; alpha_n = 0 occurs: accepted pointwise although the sequences are stated in (0,1)");
    }
    verdict("(i)", outside.is_none() && margin_ok, liminf, note)
}

/// `lim β_n = 0` and `∑ β_n = ∞`.
fn beta_entry(condition: &str, s: &ScheduleSet, horizon: usize) -> ConditionVerdict {
    let seq = &s.beta;
    let partial: f64 = s.indices(horizon).map(|n| seq.eval(n)).sum();
    match (seq.limit(), seq.series_diverges()) {
        (Some(l), Some(div)) => verdict(
            condition,
            l == 0.0 && div,
            partial,
            format!("limit {l}, series {}; {SYMBOLIC}", if div { "diverges" } else { "converges" }),
        ),
        _ => {
            let last = seq.eval(s.offset + horizon - 1);
            let tail_sum: f64 = s.tail(horizon).map(|n| seq.eval(n)).sum();
            verdict(
                condition,
                last.abs() < VANISH_EPS && tail_sum >= DIVERGENCE_TAIL_SUM,
                partial,
                format!("last value {last}, tail sum {tail_sum}; {FINITE}"),
            )
        }
    }
}

/// `limsup γ_n < 1`.
fn gamma_limsup_entry(s: &ScheduleSet, horizon: usize) -> ConditionVerdict {
    let seq = &s.gamma;
    match seq.limit() {
        Some(l) => verdict("(iii)", l < 1.0, 1.0 - l, format!("limsup gamma_n = {l}; {SYMBOLIC}")),
        None => {
            let sup = sup_over(s.tail(horizon), |n| seq.eval(n));
            verdict(
                "(iii)",
                sup <= 1.0 - MARGIN_DELTA,
                1.0 - sup,
                format!("tail sup gamma_n = {sup}; {FINITE}"),
            )
        }
    }
}

/// Conditions of the main theorem in a 2-uniformly smooth space:
/// (i) `α_n ∈ [0, μ]`, `μ = min{1, λ/K²}`, `liminf α_n(λ − K²α_n) > 0`;
/// (ii) `β_n → 0`, `∑ β_n = ∞`; (iii) `limsup γ_n < 1`.
pub fn validate_theorem31(s: &ScheduleSet, lambda: f64, k2: f64, horizon: usize) -> Result<VerdictReport> {
    s.validate()?;
    check_horizon(horizon, 1)?;
    let mu = (lambda / k2).min(1.0);
    Ok(VerdictReport {
        theorem: "theorem31".into(),
        horizon,
        entries: alloc::vec![
            range_entry(s, horizon),
            alpha_margin_entry(s, horizon, mu, |a| a * (lambda - k2 * a)),
            beta_entry("(ii)", s, horizon),
            gamma_limsup_entry(s, horizon),
        ],
    })
}

/// The q-uniformly smooth variant: margin `α(qλ − C_q α^{q−1})` and
/// `μ = min{1, (qλ/C_q)^{1/(q−1)}}`.
pub fn validate_theorem32(
    s: &ScheduleSet,
    lambda: f64,
    q: f64,
    cq: f64,
    horizon: usize,
) -> Result<VerdictReport> {
    s.validate()?;
    check_horizon(horizon, 1)?;
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("q must exceed 1, got {q}")));
    }
    if !(cq > 0.0) {
        return Err(Error::InvalidParameter(format!("Cq must be positive, got {cq}")));
    }
    let mu = libm::pow(q * lambda / cq, 1.0 / (q - 1.0)).min(1.0);
    Ok(VerdictReport {
        theorem: "theorem32".into(),
        horizon,
        entries: alloc::vec![
            range_entry(s, horizon),
            alpha_margin_entry(s, horizon, mu, |a| a * (q * lambda - cq * libm::pow(a, q - 1.0))),
            beta_entry("(ii)", s, horizon),
            gamma_limsup_entry(s, horizon),
        ],
    })
}

/// Earlier, stricter condition sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Legacy {
    /// (i) `α_n ∈ [a, μ]`, (ii) `β_n → 0`, `∑β_n = ∞`,
    /// (iii) `|α_{n+1} − α_n| → 0`, (iv) `0 < liminf γ_n ≤ limsup γ_n < 1`.
    Zhou,
    /// The `γ ≡ 0` scheme with (i) `α_n ∈ [a, μ]`, (ii) `∑|α_{n+1} − α_n| < ∞`,
    /// (iii) `β_n → 0`, `∑β_n = ∞`, `∑|β_{n+1} − β_n| < ∞`.
    ChaiSong,
}

/// `α_n ∈ [a, μ]` for some `a ∈ (0, μ)`.
fn alpha_bracket_entry(s: &ScheduleSet, horizon: usize, mu: f64) -> ConditionVerdict {
    let seq = &s.alpha;
    let sup = sup_over(s.indices(horizon), |n| seq.eval(n));
    let mut inf = inf_over(s.indices(horizon), |n| seq.eval(n));
    let note = match seq.limit() {
        Some(l) => {
            inf = inf.min(l);
            SYMBOLIC
        }
        None => FINITE,
    };
    let pass = inf > 0.0 && sup <= mu;
    verdict("(i)", pass, inf, format!("alpha_n in [{inf}, {sup}], mu = {mu}; {note}"))
}

fn variation_entry(condition: &str, seq: &Sequence, s: &ScheduleSet, horizon: usize, what: &str) -> ConditionVerdict {
    let total: f64 = s
        .indices(horizon)
        .skip(1)
        .map(|n| (seq.eval(n) - seq.eval(n - 1)).abs())
        .sum();
    match seq.variation_summable() {
        Some(ok) => verdict(condition, ok, total, format!("sum |{what}_(n+1) - {what}_n| finite: {ok}; {SYMBOLIC}")),
        None => {
            let tail: f64 = s
                .tail(horizon)
                .skip(1)
                .map(|n| (seq.eval(n) - seq.eval(n - 1)).abs())
                .sum();
            verdict(
                condition,
                tail < MARGIN_DELTA,
                total,
                format!("tail variation {tail}; {FINITE}"),
            )
        }
    }
}

pub fn validate_legacy(
    s: &ScheduleSet,
    which: Legacy,
    lambda: f64,
    k2: f64,
    horizon: usize,
) -> Result<VerdictReport> {
    s.validate()?;
    check_horizon(horizon, 2)?;
    let mu = (lambda / k2).min(1.0);
    let entries = match which {
        Legacy::Zhou => {
            let alpha = &s.alpha;
            let step_to_zero = match alpha.limit() {
                Some(l) => verdict(
                    "(iii)",
                    l.is_finite(),
                    0.0,
                    format!("alpha_n converges, so successive differences vanish; {SYMBOLIC}"),
                ),
                None => {
                    let m = sup_over(s.tail(horizon).skip(1), |n| (alpha.eval(n) - alpha.eval(n - 1)).abs());
                    verdict("(iii)", m < MARGIN_DELTA, m, format!("tail max |alpha_(n+1) - alpha_n| = {m}; {FINITE}"))
                }
            };
            let gamma = &s.gamma;
            let (lo, hi, note) = match gamma.limit() {
                Some(l) => (l, l, SYMBOLIC),
                None => (
                    inf_over(s.tail(horizon), |n| gamma.eval(n)),
                    sup_over(s.tail(horizon), |n| gamma.eval(n)),
                    FINITE,
                ),
            };
            let (lo_ok, hi_ok) = if gamma.is_closed_form() {
                (lo > 0.0, hi < 1.0)
            } else {
                (lo >= MARGIN_DELTA, hi <= 1.0 - MARGIN_DELTA)
            };
            alloc::vec![
                range_entry(s, horizon),
                alpha_bracket_entry(s, horizon, mu),
                beta_entry("(ii)", s, horizon),
                step_to_zero,
                verdict(
                    "(iv)",
                    lo_ok && hi_ok,
                    lo.min(1.0 - hi),
                    format!("liminf gamma_n = {lo}, limsup gamma_n = {hi}; {note}"),
                ),
            ]
        }
        Legacy::ChaiSong => {
            let zero = match s.gamma.is_identically_zero() {
                Some(z) => z,
                None => s.indices(horizon).all(|n| s.gamma.eval(n) == 0.0),
            };
            let mut beta = beta_entry("(iii)", s, horizon);
            let beta_var = variation_entry("(iii)", &s.beta, s, horizon, "beta");
            beta.pass &= beta_var.pass;
            beta.note = format!("{}; {}", beta.note, beta_var.note);
            alloc::vec![
                range_entry(s, horizon),
                verdict("scheme", zero, 0.0, "requires gamma_n = 0 for all n"),
                alpha_bracket_entry(s, horizon, mu),
                variation_entry("(ii)", &s.alpha, s, horizon, "alpha"),
                beta,
            ]
        }
    };
    Ok(VerdictReport {
        theorem: match which {
            Legacy::Zhou => "zhou",
            Legacy::ChaiSong => "chai_song",
        }
        .into(),
        horizon,
        entries,
    })
}
