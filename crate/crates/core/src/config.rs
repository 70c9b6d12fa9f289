//! JSON experiment configuration (`"schema_version": 1`) and manifests.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "profile": { "kind": "closed_form", "expr": "1+y/2", "lower": 1, "upper": 1.5 },
//!   "perturbation": { "kind": "shrink", "theta": 0.9 },
//!   "truncation": [8, 8],
//!   "weighted": true
//! }
//! ```
//!
//! Every field but `schema_version` is optional; each command asks for the
//! fields it needs and reports the missing ones.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bases::{GFamily, IndexSet};
use crate::domains::{approximate_profile, ApproxOptions, ProfileFunction, StepProfile};
use crate::error::{Error, Result};
use crate::gram::{BoundingBox, Target};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    ClosedForm {
        expr: String,
        lower: f64,
        upper: f64,
        #[serde(default)]
        jumps: Vec<f64>,
    },
    Step {
        values: Vec<f64>,
    },
    Samples {
        ys: Vec<f64>,
        fs: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ProfileFunction> {
        match self {
            ProfileSpec::Constant { value } => ProfileFunction::constant(*value),
            ProfileSpec::ClosedForm {
                expr,
                lower,
                upper,
                jumps,
            } => ProfileFunction::closed_form(expr, *lower, *upper)?.with_jumps(jumps.clone()),
            ProfileSpec::Step { values } => Ok(ProfileFunction::from_step(StepProfile::new(values.clone())?)),
            ProfileSpec::Samples { ys, fs } => ProfileFunction::from_samples(ys.clone(), fs.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    Unperturbed,
    Ingham,
    Shrink { theta: f64 },
    /// `g_n = s_{|n|}`, the certified step approximations of the profile.
    StepApprox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Element { n: i64, k: i64 },
    Box { x: (f64, f64), y: (f64, f64) },
    Constant { value: f64 },
}

impl TargetSpec {
    pub fn build(&self) -> Target {
        match self {
            TargetSpec::Element { n, k } => Target::Element { n: *n, k: *k },
            TargetSpec::Box { x, y } => Target::BoxIndicator { x: *x, y: *y },
            TargetSpec::Constant { value } => Target::Constant(*value),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
    /// `(N_x, N_y)`: `|n| <= N_x`, `|k| <= N_y`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<(i64, i64)>,
    /// Sweep of truncations for Gram and reconstruction runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncations: Option<Vec<(i64, i64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<i64>,
    /// `n` values for step approximation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounding_box: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    /// Multi-rectangle step values `b_j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_window: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cond: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
}

fn missing(field: &str) -> Error {
    Error::InvalidArgument(format!("config is missing `{field}`"))
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let c: Config = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Config> {
        Config::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(p) = &self.profile {
            p.build()?;
        }
        for (nx, ny) in self.truncation.iter().chain(self.truncations.iter().flatten()) {
            if *nx < 0 || *ny < 0 {
                return Err(Error::InvalidArgument("truncations must be non-negative".into()));
            }
        }
        if let Some(PerturbationSpec::Shrink { theta }) = &self.perturbation {
            if !theta.is_finite() {
                return Err(Error::InvalidArgument("theta must be finite".into()));
            }
        }
        if let Some(s) = &self.steps {
            StepProfile::new(s.clone())?;
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<ProfileFunction> {
        self.profile.as_ref().ok_or_else(|| missing("profile"))?.build()
    }

    pub fn truncation(&self) -> Result<(i64, i64)> {
        self.truncation.ok_or_else(|| missing("truncation"))
    }

    pub fn index(&self) -> Result<IndexSet> {
        let (nx, ny) = self.truncation()?;
        Ok(IndexSet::symmetric(nx, ny))
    }

    pub fn truncation_sweep(&self) -> Result<Vec<(i64, i64)>> {
        match (&self.truncations, self.truncation) {
            (Some(t), _) if !t.is_empty() => Ok(t.clone()),
            (_, Some(t)) => Ok(vec![t]),
            _ => Err(missing("truncation")),
        }
    }

    pub fn step_profile(&self) -> Result<StepProfile> {
        if let Some(s) = &self.steps {
            return StepProfile::new(s.clone());
        }
        match &self.profile {
            Some(ProfileSpec::Step { values }) => StepProfile::new(values.clone()),
            _ => Err(missing("steps")),
        }
    }

    /// The perturbation family for `|n| <= n_max`; `None` means unperturbed.
    pub fn g_family(&self, profile: &ProfileFunction, n_max: i64) -> Result<Option<GFamily>> {
        Ok(match self.perturbation.as_ref().unwrap_or(&PerturbationSpec::Unperturbed) {
            PerturbationSpec::Unperturbed => None,
            PerturbationSpec::Ingham => Some(GFamily::ingham(profile.clone())),
            PerturbationSpec::Shrink { theta } => Some(GFamily::shrink(profile.clone(), *theta)),
            PerturbationSpec::StepApprox => {
                let opts = ApproxOptions {
                    audit_grid: self.audit_grid.unwrap_or(10_000),
                    ..ApproxOptions::default()
                };
                let steps = (1..=n_max.max(1) as u32)
                    .map(|n| approximate_profile(profile, n, opts).map(|a| a.step))
                    .collect::<Result<Vec<_>>>()?;
                Some(GFamily::from_steps(profile.clone(), steps)?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Validate,
    Approximate,
    Stability,
    Gram,
    Reconstruct,
    Multirect,
    Spherical,
    RestrictedFrame,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    /// Relative paths resolve against the manifest's directory.
    pub config: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl ExperimentManifest {
    pub fn from_path(path: &Path) -> Result<ExperimentManifest> {
        let mut m: ExperimentManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported manifest schema_version {}",
                m.schema_version
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        if m.config.is_relative() {
            m.config = base.join(&m.config);
        }
        if m.output_dir.is_relative() {
            m.output_dir = base.join(&m.output_dir);
        }
        Ok(m)
    }
}
