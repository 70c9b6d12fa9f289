use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::par::Execution;

/// A regular step function on `[0, 1]`: value `b_j` on
/// `[(j-1)/N, j/N)`, with the last cell closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepProfile {
    values: Vec<f64>,
}

impl StepProfile {
    pub fn new(values: Vec<f64>) -> Result<StepProfile> {
        if values.is_empty() {
            return Err(Error::InvalidProfile("step profile needs at least one value".into()));
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidProfile(format!(
                "step value b_{} = {v} must be finite and positive",
                j + 1
            )));
        }
        Ok(StepProfile { values })
    }

    /// Number of cells `N`.
    pub fn steps(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Zero-based index of the cell containing `y`. Values within 1e-9 cell
    /// widths of an interior boundary are snapped onto it so that exact
    /// boundaries computed in floating point land in the right cell.
    pub fn cell_of(&self, y: f64) -> usize {
        let n = self.values.len();
        let t = y * n as f64;
        let r = t.round();
        let cell = if (t - r).abs() < 1e-9 { r } else { t.floor() };
        (cell.max(0.0) as usize).min(n - 1)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.values[self.cell_of(y)]
    }

    /// `[(j-1)/N, j/N]` for the zero-based cell `j - 1`.
    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        let n = self.values.len() as f64;
        (cell as f64 / n, (cell + 1) as f64 / n)
    }

    /// Interior cell boundaries `j/N`, `j = 1..N-1`.
    pub fn interior_boundaries(&self) -> Vec<f64> {
        let n = self.values.len();
        (1..n).map(|j| j as f64 / n as f64).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Continuity {
    Continuous,
    /// Jump points in `(0, 1)`. At a jump the evaluator must return the
    /// right-hand limit, matching the half-open step convention.
    PiecewiseContinuous { jumps: Vec<f64> },
}

#[derive(Clone)]
enum Source {
    Constant(f64),
    Expr(Arc<Expr>),
    Step(StepProfile),
    Samples { ys: Arc<Vec<f64>>, fs: Arc<Vec<f64>> },
    Scaled { inner: Arc<ProfileFunction>, factor: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// The boundary function `f` of a trapezoid, with declared bounds
/// `0 < lower <= f <= upper`.
#[derive(Clone)]
pub struct ProfileFunction {
    source: Source,
    lower: f64,
    upper: f64,
    continuity: Continuity,
}

impl fmt::Debug for ProfileFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileFunction")
            .field("source", &self.describe())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("continuity", &self.continuity)
            .finish()
    }
}

fn check_bounds(lower: f64, upper: f64) -> Result<()> {
    if !(lower.is_finite() && upper.is_finite()) || lower <= 0.0 || lower > upper {
        return Err(Error::InvalidProfile(format!(
            "bounds must satisfy 0 < lower <= upper, got [{lower}, {upper}]"
        )));
    }
    Ok(())
}

impl ProfileFunction {
    pub fn constant(c: f64) -> Result<ProfileFunction> {
        check_bounds(c, c)?;
        Ok(ProfileFunction {
            source: Source::Constant(c),
            lower: c,
            upper: c,
            continuity: Continuity::Continuous,
        })
    }

    pub fn closed_form(expr: &str, lower: f64, upper: f64) -> Result<ProfileFunction> {
        check_bounds(lower, upper)?;
        Ok(ProfileFunction {
            source: Source::Expr(Arc::new(Expr::parse(expr)?)),
            lower,
            upper,
            continuity: Continuity::Continuous,
        })
    }

    pub fn from_fn<F>(f: F, lower: f64, upper: f64) -> Result<ProfileFunction>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_bounds(lower, upper)?;
        Ok(ProfileFunction {
            source: Source::Custom(Arc::new(f)),
            lower,
            upper,
            continuity: Continuity::Continuous,
        })
    }

    /// A regular step profile; bounds are its min and max, jumps its
    /// interior cell boundaries.
    pub fn from_step(step: StepProfile) -> ProfileFunction {
        let (lower, upper) = (step.min(), step.max());
        let jumps = step.interior_boundaries();
        ProfileFunction {
            source: Source::Step(step),
            lower,
            upper,
            continuity: if jumps.is_empty() {
                Continuity::Continuous
            } else {
                Continuity::PiecewiseContinuous { jumps }
            },
        }
    }

    /// Piecewise-linear interpolation through `(ys, fs)`; `ys` strictly
    /// increasing from 0 to 1.
    pub fn from_samples(ys: Vec<f64>, fs: Vec<f64>) -> Result<ProfileFunction> {
        if ys.len() != fs.len() || ys.len() < 2 {
            return Err(Error::InvalidProfile(
                "samples need matching ys/fs with at least two points".into(),
            ));
        }
        if ys[0] != 0.0 || ys[ys.len() - 1] != 1.0 || ys.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProfile(
                "sample abscissae must increase strictly from 0 to 1".into(),
            ));
        }
        let lower = fs.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        check_bounds(lower, upper)?;
        Ok(ProfileFunction {
            source: Source::Samples {
                ys: Arc::new(ys),
                fs: Arc::new(fs),
            },
            lower,
            upper,
            continuity: Continuity::Continuous,
        })
    }

    /// Declares jump points. They must lie strictly inside `(0, 1)`.
    pub fn with_jumps(mut self, mut jumps: Vec<f64>) -> Result<ProfileFunction> {
        if jumps.iter().any(|j| !(*j > 0.0 && *j < 1.0)) {
            return Err(Error::InvalidProfile("jump points must lie in (0, 1)".into()));
        }
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        self.continuity = if jumps.is_empty() {
            Continuity::Continuous
        } else {
            Continuity::PiecewiseContinuous { jumps }
        };
        Ok(self)
    }

    /// Overrides the declared bounds.
    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Result<ProfileFunction> {
        check_bounds(lower, upper)?;
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    /// `c f`, with bounds scaled accordingly.
    pub fn scaled(&self, factor: f64) -> Result<ProfileFunction> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {factor} must be positive")));
        }
        Ok(ProfileFunction {
            source: Source::Scaled {
                inner: Arc::new(self.clone()),
                factor,
            },
            lower: self.lower * factor,
            upper: self.upper * factor,
            continuity: self.continuity.clone(),
        })
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.source {
            Source::Constant(c) => *c,
            Source::Expr(e) => e.eval(y),
            Source::Step(s) => s.eval(y),
            Source::Samples { ys, fs } => interpolate(ys, fs, y),
            Source::Scaled { inner, factor } => factor * inner.eval(y),
            Source::Custom(f) => f(y),
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn continuity(&self) -> &Continuity {
        &self.continuity
    }

    pub fn jumps(&self) -> &[f64] {
        match &self.continuity {
            Continuity::Continuous => &[],
            Continuity::PiecewiseContinuous { jumps } => jumps,
        }
    }

    /// `[0, jumps..., 1]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.jumps().len() + 2);
        b.push(0.0);
        b.extend_from_slice(self.jumps());
        b.push(1.0);
        b
    }

    /// The underlying step profile, if this profile is one.
    pub fn as_step(&self) -> Option<&StepProfile> {
        match &self.source {
            Source::Step(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        match &self.source {
            Source::Constant(_) => true,
            Source::Step(s) => s.steps() == 1,
            Source::Scaled { inner, .. } => inner.is_constant(),
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        match &self.source {
            Source::Constant(c) => format!("constant {c}"),
            Source::Expr(e) => format!("closed form {}", e.source()),
            Source::Step(s) => format!("step {:?}", s.values()),
            Source::Samples { ys, .. } => format!("samples ({} points)", ys.len()),
            Source::Scaled { inner, factor } => format!("{factor} * ({})", inner.describe()),
            Source::Custom(_) => "custom evaluator".to_string(),
        }
    }
}

fn interpolate(ys: &[f64], fs: &[f64], y: f64) -> f64 {
    if y <= ys[0] {
        return fs[0];
    }
    let last = ys.len() - 1;
    if y >= ys[last] {
        return fs[last];
    }
    let i = ys.partition_point(|v| *v <= y) - 1;
    let t = (y - ys[i]) / (ys[i + 1] - ys[i]);
    fs[i] + t * (fs[i + 1] - fs[i])
}

/// Uniform grid of `n >= 2` points on `[0, 1]`, endpoints included.
pub fn unit_grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    let denom = (n.max(2) - 1) as f64;
    (0..n).map(move |i| i as f64 / denom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub y: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub grid_size: usize,
    pub lower: f64,
    pub upper: f64,
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
    pub violation_count: usize,
    /// First violations in grid order (at most 100).
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

const MAX_LISTED_VIOLATIONS: usize = 100;

/// Samples the profile on a uniform grid and checks the declared bounds.
pub fn validate_profile(profile: &ProfileFunction, grid_size: usize) -> Result<ValidationReport> {
    validate_profile_with(profile, grid_size, Execution::default())
}

pub fn validate_profile_with(
    profile: &ProfileFunction,
    grid_size: usize,
    exec: Execution,
) -> Result<ValidationReport> {
    if grid_size < 2 {
        return Err(Error::GridTooSmall(grid_size));
    }
    let denom = (grid_size - 1) as f64;
    let values = exec.map(grid_size, |i| profile.eval(i as f64 / denom));

    let (mut min, mut argmin, mut max, mut argmax) = (f64::INFINITY, 0.0, f64::NEG_INFINITY, 0.0);
    let mut violations = Vec::new();
    let mut violation_count = 0;
    for (i, v) in values.iter().copied().enumerate() {
        let y = i as f64 / denom;
        if v < min || v.is_nan() {
            min = v;
            argmin = y;
        }
        if v > max {
            max = v;
            argmax = y;
        }
        if !(v >= profile.lower() && v <= profile.upper()) {
            violation_count += 1;
            if violations.len() < MAX_LISTED_VIOLATIONS {
                violations.push(Violation { y, value: v });
            }
        }
    }
    if !(min > 0.0) {
        return Err(Error::NotAdmissible {
            min,
            at: argmin,
            violations: violations.iter().map(|v| (v.y, v.value)).collect(),
        });
    }
    Ok(ValidationReport {
        grid_size,
        lower: profile.lower(),
        upper: profile.upper(),
        min,
        argmin,
        max,
        argmax,
        violation_count,
        violations,
    })
}
