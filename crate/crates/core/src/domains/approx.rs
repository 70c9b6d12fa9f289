//! Regular step approximations `s_n` of a profile with
//! `sup |1/s_n - 1/f| < 1/(4n)`.

use serde::{Deserialize, Serialize};

use super::profile::{ProfileFunction, StepProfile};
use crate::error::{Error, Result};
use crate::par::Execution;

#[derive(Clone, Copy, Debug)]
pub struct ApproxOptions {
    /// Number of audit points on `[0, 1]`.
    pub audit_grid: usize,
    /// Largest partition count tried.
    pub max_steps: usize,
    pub exec: Execution,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            audit_grid: 10_000,
            max_steps: 1 << 20,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepApproximation {
    pub n: u32,
    /// `1/(4n)`.
    pub bound: f64,
    /// Partition count `N` of the certified step profile.
    pub steps: usize,
    /// `sup f` used for the internal normalization.
    pub scale: f64,
    /// `s_n` in the original scale.
    pub step: StepProfile,
    /// Audit sup of `|1/s - 1/f|` after normalizing `sup f = 1`.
    pub sup_inverse_normalized: f64,
    /// Audit sup of `|1/s - 1/f|` in the original scale.
    pub sup_inverse: f64,
    /// Audit sup of `|s - f|` in the original scale.
    pub sup_uniform: f64,
    pub audit_grid: usize,
}

impl StepApproximation {
    pub fn is_certified(&self) -> bool {
        self.sup_inverse_normalized < self.bound
            && self.sup_inverse < self.bound
            && self.sup_uniform < self.bound
    }
}

/// Smallest `q <= 4096` with `x q` an integer (to 1e-9).
fn denominator(x: f64) -> Option<usize> {
    (1..=4096usize).find(|q| {
        let t = x * *q as f64;
        (t - t.round()).abs() < 1e-9
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest admissible partition count: every declared jump must fall on a
/// cell boundary, so `N` is a multiple of the jumps' common denominator.
pub fn base_partition(profile: &ProfileFunction) -> Result<usize> {
    let mut base = 1usize;
    for &j in profile.jumps() {
        let q = denominator(j).ok_or_else(|| {
            Error::InvalidProfile(format!(
                "jump point {j} is not a rational with denominator <= 4096, so no regular partition contains it"
            ))
        })?;
        base = base / gcd(base, q) * q;
    }
    Ok(base)
}

/// Step profile sampling `f` at the left endpoint of each of `n` cells.
pub fn left_endpoint_step(profile: &ProfileFunction, n: usize) -> Result<StepProfile> {
    StepProfile::new((0..n).map(|j| profile.eval(j as f64 / n as f64)).collect())
}

struct Audit {
    inverse: f64,
    uniform: f64,
}

fn audit(profile: &ProfileFunction, step: &StepProfile, grid: usize, exec: Execution) -> Audit {
    let denom = (grid - 1) as f64;
    let per_point = exec.map(grid, |i| {
        let y = i as f64 / denom;
        let (f, s) = (profile.eval(y), step.eval(y));
        ((1.0 / s - 1.0 / f).abs(), (s - f).abs())
    });
    per_point.into_iter().fold(
        Audit {
            inverse: 0.0,
            uniform: 0.0,
        },
        |a, (inv, uni)| Audit {
            inverse: a.inverse.max(inv),
            uniform: a.uniform.max(uni),
        },
    )
}

/// Builds `s_n` by doubling the partition count until the audit certifies
/// `sup|1/s_n - 1/f| < 1/(4n)` (with `sup f` normalized to 1) as well as
/// both bounds in the original scale.
pub fn approximate_profile(
    profile: &ProfileFunction,
    n: u32,
    opts: ApproxOptions,
) -> Result<StepApproximation> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if opts.audit_grid < 2 {
        return Err(Error::GridTooSmall(opts.audit_grid));
    }
    let bound = 1.0 / (4.0 * n as f64);
    let denom = (opts.audit_grid - 1) as f64;
    let scale = opts
        .exec
        .map(opts.audit_grid, |i| profile.eval(i as f64 / denom))
        .into_iter()
        .chain(profile.jumps().iter().map(|j| profile.eval(*j)))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidProfile(format!("sup f = {scale} is not a positive number")));
    }

    let mut steps = base_partition(profile)?;
    let mut best = f64::INFINITY;
    while steps <= opts.max_steps {
        let step = left_endpoint_step(profile, steps)?;
        let a = audit(profile, &step, opts.audit_grid, opts.exec);
        let result = StepApproximation {
            n,
            bound,
            steps,
            scale,
            step,
            sup_inverse_normalized: a.inverse * scale,
            sup_inverse: a.inverse,
            sup_uniform: a.uniform,
            audit_grid: opts.audit_grid,
        };
        if result.is_certified() {
            return Ok(result);
        }
        best = best.min(
            result
                .sup_inverse_normalized
                .max(result.sup_inverse)
                .max(result.sup_uniform),
        );
        steps *= 2;
    }
    Err(Error::ApproximationFailed {
        n,
        cap: opts.max_steps,
        best,
    })
}
