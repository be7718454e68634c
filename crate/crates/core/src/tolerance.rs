/// Numerical tolerances shared by every inequality and identity check.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Tolerances {
    /// Relative tolerance for equality checks.
    pub equality_rel: f64,
    /// Absolute slack tolerance for inequalities, scaled by `1 + magnitude`.
    pub slack_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            equality_rel: 1e-9,
            slack_abs: 1e-9,
        }
    }
}

impl Tolerances {
    /// Allowed negative slack for an inequality whose larger side has the given magnitude.
    pub fn slack_floor(&self, magnitude: f64) -> f64 {
        -self.slack_abs * (1.0 + magnitude.abs())
    }

    pub fn slack_ok(&self, slack: f64, magnitude: f64) -> bool {
        slack >= self.slack_floor(magnitude)
    }

    pub fn approx_eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.equality_rel * (1.0 + a.abs().max(b.abs()))
    }
}
