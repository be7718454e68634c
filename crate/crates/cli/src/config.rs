//! The JSON run configuration.
//!
//! One document describes the space, the operator with its claimed λ, the
//! schedules, the vectors `u` and `x_0`, and optionally a sweep grid. Unknown
//! fields are rejected everywhere.

use std::path::{Path, PathBuf};

use mannlab_core::iteration::DEFAULT_T_GRID;
use mannlab_core::operators::{GalleryParams, DEFAULT_BOX, DEFAULT_PAIRS};
use mannlab_core::{Operator, ScheduleSet, Space, Tolerances, Vector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub space: SpaceSpec,
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedules: Option<ScheduleSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub anchor: AnchorSpec,
    #[serde(default)]
    pub certify: CertifySpec,
    #[serde(default)]
    pub smooth_check: SmoothCheckSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepCell>>,
}

fn default_max_iter() -> usize {
    10_000
}

fn default_residual_tol() -> f64 {
    mannlab_core::iteration::DEFAULT_RESIDUAL_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Euclidean,
    Lp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(rename = "K2_override", default, skip_serializing_if = "Option::is_none")]
    pub k2_override: Option<f64>,
    #[serde(rename = "Cq", default, skip_serializing_if = "Option::is_none")]
    pub cq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Space, CliError> {
        let mut space = match self.kind {
            SpaceKind::Euclidean => {
                if self.p.is_some() {
                    return Err(CliError::Usage("`p` is only meaningful for lp spaces".into()));
                }
                Space::euclidean(self.dim)?
            }
            SpaceKind::Lp => {
                let p = self
                    .p
                    .ok_or_else(|| CliError::Usage("lp space requires `p`".into()))?;
                Space::lp(self.dim, p)?
            }
        };
        if let Some(k2) = self.k2_override {
            space = space.with_k2(k2)?;
        }
        if self.q.is_some() || self.cq.is_some() {
            let q = self.q.unwrap_or(2.0);
            let cq = self.cq.unwrap_or(space.cq());
            space = space.with_q_constant(q, cq)?;
        }
        Ok(space)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub name: String,
    #[serde(default)]
    pub params: GalleryParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl OperatorSpec {
    pub fn build(&self, space: &Space) -> Result<Operator, CliError> {
        Ok(Operator::gallery(&self.name, space, &self.params, self.lambda)?)
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        self.lambda
            .ok_or_else(|| CliError::Usage("operator needs a claimed `lambda`".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorSpec {
    pub t_grid: Vec<f64>,
    pub tol: f64,
}

impl Default for AnchorSpec {
    fn default() -> Self {
        Self {
            t_grid: DEFAULT_T_GRID.to_vec(),
            tol: mannlab_core::iteration::DEFAULT_SOLVER_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySpec {
    pub n_pairs: usize,
    #[serde(rename = "box")]
    pub sampling_box: f64,
}

impl Default for CertifySpec {
    fn default() -> Self {
        Self {
            n_pairs: DEFAULT_PAIRS,
            sampling_box: DEFAULT_BOX,
        }
    }
}

/// Sampling budget for re-validating `K²` in p-norm spaces at run start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothCheckSpec {
    pub n_samples: usize,
}

impl Default for SmoothCheckSpec {
    fn default() -> Self {
        Self { n_samples: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

/// One cell of a sweep: its own schedules and optionally its own vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCell {
    pub id: String,
    pub schedules: ScheduleSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("a `seed` is required (config or --seed)".into()))
    }

    pub fn schedules(&self) -> Result<&ScheduleSet, CliError> {
        self.schedules
            .as_ref()
            .ok_or_else(|| CliError::Usage("config needs `schedules`".into()))
    }

    pub fn u(&self) -> Result<Vector, CliError> {
        vector(self.u.as_deref(), "u")
    }

    pub fn x0(&self) -> Result<Vector, CliError> {
        vector(self.x0.as_deref(), "x0")
    }
}

pub fn vector(coords: Option<&[f64]>, what: &str) -> Result<Vector, CliError> {
    let c = coords.ok_or_else(|| CliError::Usage(format!("config needs `{what}`")))?;
    Vector::new(c.to_vec()).map_err(|e| CliError::Usage(format!("`{what}`: {e}")))
}
