//! Truncated Gram matrices, frame-bound estimates and dual-frame
//! reconstruction.
//!
//! Entries are `G[i][j] = <e_j, e_i> = int e_j conj(e_i)`, rows in the
//! family's index order, so that `G c = b` with `b_i = <t, e_i>` gives the
//! least-squares coefficients of a target `t`. The x-integral over each
//! cross-section is always done in closed form (or by a fixed high-order
//! rule for radial powers). The y-integral is closed form when the
//! integrand is piecewise constant in `y` apart from the exponential, and
//! adaptive Gauss–Kronrod otherwise.

mod export;
mod frame;
mod reconstruct;

pub use export::{read_binary, read_csv, write_binary, write_csv, BinaryPrecision};
pub use frame::{restricted_frame_check, BoundingBox, FrameOptions, RestrictedFrameReport};
pub use reconstruct::{reconstruct, reconstruct_with_gram, ReconstructionReport, Target};

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bases::{BasisFamily, IndexSet, Weight};
use crate::domains::{MultiInterval, SphericalTrapezoid, StepProfile, Trapezoid};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::par::Execution;
use crate::quadrature::{integrate, integrate_real, QuadFailure, QuadOptions};

/// Stamped into every report.
pub const FINITE_SECTION_CAVEAT: &str = "finite-section evidence only: eigenvalues of a truncated Gram matrix \
     are consistent with, but do not prove, Riesz-basis bounds";

/// Condition numbers above this are treated as numerically singular.
pub const COND_LIMIT: f64 = 1e10;

#[derive(Clone, Debug)]
pub enum Domain {
    Trapezoid(Trapezoid),
    /// Regular multi-rectangle: `(-b_j, b_j) x ((j-1)/N, j/N)`.
    MultiRect(StepProfile),
    /// `x` in a multi-interval, `y` in an interval.
    Product { x: MultiInterval, y: (f64, f64) },
    /// Spherical trapezoid in `(r, y)` coordinates with measure
    /// `|S^{d-2}| r^{d-2} dr dy`.
    Spherical(SphericalTrapezoid),
}

impl Domain {
    pub fn y_range(&self) -> (f64, f64) {
        match self {
            Domain::Product { y, .. } => *y,
            _ => (0.0, 1.0),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Domain::Spherical(_))
    }

    /// Exponent of `r` in the measure.
    pub(crate) fn measure_power(&self) -> f64 {
        match self {
            Domain::Spherical(s) => s.dim() as f64 - 2.0,
            _ => 0.0,
        }
    }

    pub(crate) fn sphere(&self) -> f64 {
        match self {
            Domain::Spherical(s) => s.sphere_measure(),
            _ => 1.0,
        }
    }

    /// `[y0, jumps..., y1]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Domain::Trapezoid(t) => t.profile.breakpoints(),
            Domain::MultiRect(s) => {
                let mut b = vec![0.0];
                b.extend(s.interior_boundaries());
                b.push(1.0);
                b
            }
            Domain::Product { y, .. } => vec![y.0, y.1],
            Domain::Spherical(s) => s.profile.breakpoints(),
        }
    }

    /// True when the cross-section does not depend on `y`.
    pub fn is_y_constant(&self) -> bool {
        match self {
            Domain::Trapezoid(t) => t.profile.is_constant(),
            Domain::MultiRect(s) => s.steps() == 1,
            Domain::Product { .. } => true,
            Domain::Spherical(s) => s.profile.is_constant(),
        }
    }

    /// Cross-section at height `y` as x-intervals (`[0, f(y)]` for radial
    /// domains).
    pub fn cross_section(&self, y: f64) -> Vec<(f64, f64)> {
        match self {
            Domain::Trapezoid(t) => {
                let f = t.profile.eval(y);
                vec![(-f, f)]
            }
            Domain::MultiRect(s) => {
                let b = s.eval(y);
                vec![(-b, b)]
            }
            Domain::Product { x, .. } => x.segments().to_vec(),
            Domain::Spherical(s) => vec![(0.0, s.profile.eval(y))],
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (y0, y1) = self.y_range();
        (y0..=y1).contains(&y) && self.cross_section(y).iter().any(|(l, r)| (*l..=*r).contains(&x))
    }

    /// Measure of the domain (volume for spherical trapezoids).
    pub fn measure(&self) -> Result<f64> {
        match self {
            Domain::Trapezoid(t) => t.area(),
            Domain::MultiRect(s) => Ok(2.0 * s.values().iter().sum::<f64>() / s.steps() as f64),
            Domain::Product { x, y } => Ok(x.total_length() * (y.1 - y.0)),
            Domain::Spherical(s) => {
                let d = s.dim() as f64;
                let opts = QuadOptions {
                    abs_tol: 1e-12,
                    ..QuadOptions::default()
                };
                let v = integrate_real(|y| s.profile.eval(y).powf(d - 1.0) / (d - 1.0), &s.profile.breakpoints(), 4, opts)
                    .map_err(|e| Error::Quadrature {
                        row: 0,
                        col: 0,
                        estimate: e.error,
                        tol: opts.abs_tol,
                    })?;
                Ok(s.sphere_measure() * v)
            }
        }
    }

    /// `int_{section(y) cap [lo, hi]} r^p exp(i theta x) dmu(x)` where `p`
    /// adds `extra_power` to the measure's own radial power.
    pub(crate) fn section_integral(&self, y: f64, theta: f64, extra_power: f64, clip: Option<(f64, f64)>) -> Complex64 {
        let p = self.measure_power() + extra_power;
        let mut total = Complex64::new(0.0, 0.0);
        for (l, r) in self.cross_section(y) {
            let (l, r) = match clip {
                Some((lo, hi)) => (l.max(lo), r.min(hi)),
                None => (l, r),
            };
            if r <= l {
                continue;
            }
            total += if p == 0.0 {
                segment_integral(l, r, theta)
            } else {
                power_integral(l, r, theta, p)
            };
        }
        total * self.sphere()
    }
}

/// `int_l^r exp(i theta x) dx`, with a series branch for small `theta`.
pub fn segment_integral(l: f64, r: f64, theta: f64) -> Complex64 {
    let (m, w) = (0.5 * (l + r), 0.5 * (r - l));
    let t = theta * w;
    let s = if t.abs() < 1e-6 {
        2.0 * w * (1.0 - t * t / 6.0)
    } else {
        2.0 * t.sin() / theta
    };
    Complex64::from_polar(1.0, theta * m) * s
}

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| crate::quadrature::gauss_legendre(24))
}

/// `int_l^r x^p exp(i theta x) dx` for `0 <= l < r`.
pub(crate) fn power_integral(l: f64, r: f64, theta: f64, p: f64) -> Complex64 {
    weighted_integral(l, r, theta, p, &|_| Complex64::new(1.0, 0.0), 0)
}

/// `int_l^r x^p g(x) exp(i theta x) dx` by panelled Gauss–Legendre, with
/// `extra_panels` added to the oscillation-based panel count. Non-integer
/// powers require `l >= 0` and go through `x = s^2`, which keeps the
/// integrand smooth at the origin for `p >= -1/2`.
pub(crate) fn weighted_integral(
    l: f64,
    r: f64,
    theta: f64,
    p: f64,
    g: &dyn Fn(f64) -> Complex64,
    extra_panels: usize,
) -> Complex64 {
    let rule = gl_rule();
    let cycles = (theta.abs() * (r - l) / (2.0 * PI)).ceil() as usize;
    use crate::quadrature::gauss_legendre_integral as gl;
    if p.fract() == 0.0 {
        let panels = 1 + cycles + extra_panels;
        let h = (r - l) / panels as f64;
        (0..panels)
            .map(|k| {
                let a = l + k as f64 * h;
                gl(|x: f64| g(x) * Complex64::from_polar(x.powi(p as i32), theta * x), a, a + h, rule)
            })
            .sum()
    } else {
        let (sl, sr) = (l.sqrt(), r.sqrt());
        let panels = 1 + 2 * cycles + extra_panels;
        let h = (sr - sl) / panels as f64;
        (0..panels)
            .map(|k| {
                let a = sl + k as f64 * h;
                gl(
                    |s: f64| g(s * s) * Complex64::from_polar(2.0 * s.powf(2.0 * p + 1.0), theta * s * s),
                    a,
                    a + h,
                    rule,
                )
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GramOptions {
    /// Absolute quadrature tolerance per entry.
    pub tol: f64,
    pub max_panels: usize,
    pub exec: Execution,
    /// Skip the closed-form y-integration even when it applies.
    pub force_quadrature: bool,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions {
            tol: 1e-9,
            max_panels: 20_000,
            exec: Execution::default(),
            force_quadrature: false,
        }
    }
}

impl GramOptions {
    pub(crate) fn quad(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.tol,
            max_panels: self.max_panels,
        }
    }
}

enum Mode {
    /// Integrand constant in `y` on each cell apart from `exp(i beta y)`.
    Cells(Vec<(f64, f64)>),
    Quadrature(Vec<f64>),
}

fn aligned(profile: &crate::domains::ProfileFunction, cells: usize) -> bool {
    profile.is_constant() || profile.as_step().is_some_and(|s| cells.is_multiple_of(s.steps()))
}

/// Shared machinery for entries and moments of one family on one domain.
pub(crate) struct Assembly<'a> {
    pub(crate) family: &'a BasisFamily,
    pub(crate) domain: &'a Domain,
    pub(crate) opts: GramOptions,
    mode: Mode,
    /// Exponent of `r` in the weight.
    pub(crate) weight_power: f64,
}

impl<'a> Assembly<'a> {
    pub(crate) fn new(family: &'a BasisFamily, domain: &'a Domain, opts: GramOptions) -> Result<Assembly<'a>> {
        if matches!(family.weight, Weight::Radial { .. }) && !domain.is_radial() {
            return Err(Error::Mismatch("radial weight on a planar domain".into()));
        }
        let (y0, y1) = domain.y_range();
        let x_const = family.x_freq.is_y_independent();
        let w_const = family.weight.is_y_independent();
        let mode = if opts.force_quadrature {
            None
        } else if domain.is_y_constant() && x_const && w_const {
            Some(Mode::Cells(vec![(y0, y1)]))
        } else if let Domain::MultiRect(step) = domain {
            let n = step.steps();
            let x_ok = match &family.x_freq {
                crate::bases::XFrequency::Linear(_) => true,
                crate::bases::XFrequency::OverProfile(g) => g.ratio_is_y_independent() && aligned(g.profile(), n),
            };
            let w_ok = match &family.weight {
                Weight::Unit | Weight::Constant(_) => true,
                Weight::Trapezoid(p) => aligned(p, n),
                Weight::Radial { .. } => false,
            };
            (x_ok && w_ok).then(|| Mode::Cells((0..n).map(|j| step.cell_bounds(j)).collect()))
        } else {
            None
        };
        let mode = mode.unwrap_or_else(|| {
            let mut breaks = domain.breakpoints();
            breaks.extend(family.x_freq.jumps());
            breaks.extend(family.weight.jumps());
            breaks.retain(|b| *b >= y0 && *b <= y1);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            Mode::Quadrature(breaks)
        });
        Ok(Assembly {
            family,
            domain,
            opts,
            mode,
            weight_power: family.weight.radial_power(),
        })
    }

    pub(crate) fn is_closed_form(&self) -> bool {
        matches!(self.mode, Mode::Cells(_))
    }

    pub(crate) fn quad_breaks(&self) -> Vec<f64> {
        match &self.mode {
            Mode::Quadrature(b) => b.clone(),
            Mode::Cells(cells) => {
                let mut b: Vec<f64> = cells.iter().map(|c| c.0).collect();
                b.push(cells[cells.len() - 1].1);
                b
            }
        }
    }

    /// Cells for closed-form y-integration, if the integrand allows it.
    pub(crate) fn cells(&self) -> Option<&[(f64, f64)]> {
        match &self.mode {
            Mode::Cells(c) => Some(c),
            Mode::Quadrature(_) => None,
        }
    }

    pub(crate) fn seed_panels(&self, beta: f64) -> usize {
        let b = self.quad_breaks();
        let longest = b.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        1 + (beta.abs() * longest / (2.0 * PI)).ceil() as usize
    }

    /// `<e_a, e_b>`.
    pub(crate) fn pair(&self, a: (i64, i64), b: (i64, i64)) -> std::result::Result<Complex64, QuadFailure> {
        let fam = self.family;
        let beta = fam.angular_y(a.0, a.1) - fam.angular_y(b.0, b.1);
        let p = 2.0 * self.weight_power;
        let xpart = |y: f64| {
            let w = fam.weight.y_factor(y);
            let theta = fam.angular_x(a.0, y) - fam.angular_x(b.0, y);
            self.domain.section_integral(y, theta, p, None) * (w * w)
        };
        match &self.mode {
            Mode::Cells(cells) => Ok(cells
                .iter()
                .map(|(y0, y1)| xpart(0.5 * (y0 + y1)) * segment_integral(*y0, *y1, beta))
                .sum()),
            Mode::Quadrature(breaks) => integrate(
                |y| xpart(y) * Complex64::from_polar(1.0, beta * y),
                breaks,
                self.seed_panels(beta),
                self.opts.quad(),
            )
            .map(|r| r.value),
        }
    }
}

/// `<e_a, e_b> = int e_a conj(e_b)` over the domain.
pub fn inner_product(
    family: &BasisFamily,
    a: (i64, i64),
    b: (i64, i64),
    domain: &Domain,
    opts: GramOptions,
) -> Result<Complex64> {
    let asm = Assembly::new(family, domain, opts)?;
    asm.pair(a, b).map_err(|e| Error::Quadrature {
        row: 0,
        col: 0,
        estimate: e.error,
        tol: opts.tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramVerdict {
    IdentityWithinTol,
    Bounded,
    IllConditioned,
}

fn empty_matrix() -> CMatrix {
    CMatrix::zeros(0, 0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramReport {
    pub label: String,
    /// `(max |n|, max |k|)` over the index set.
    pub truncation: (i64, i64),
    pub index: IndexSet,
    pub dimension: usize,
    /// Exported separately (CSV or binary); not part of the JSON report.
    #[serde(skip, default = "empty_matrix")]
    pub matrix: CMatrix,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigen_min: f64,
    pub eigen_max: f64,
    pub condition_number: f64,
    pub quadrature_tolerance: f64,
    /// `max |G - I|`.
    pub identity_deviation: f64,
    pub hermitian_defect: f64,
    pub closed_form: bool,
    pub verdict: GramVerdict,
    pub caveat: String,
}

impl GramReport {
    pub fn from_matrix(label: String, index: IndexSet, matrix: CMatrix, tol: f64, closed_form: bool) -> GramReport {
        let eigenvalues = linalg::hermitian_eigenvalues(&matrix);
        let (eigen_min, eigen_max) = match (eigenvalues.first(), eigenvalues.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => (f64::NAN, f64::NAN),
        };
        let condition_number = linalg::condition_number(eigen_min, eigen_max);
        let identity_deviation = linalg::identity_deviation(&matrix);
        let verdict = if identity_deviation < 10.0 * tol {
            GramVerdict::IdentityWithinTol
        } else if condition_number <= COND_LIMIT {
            GramVerdict::Bounded
        } else {
            GramVerdict::IllConditioned
        };
        let abs_max = |v: &[i64]| v.iter().map(|x| x.abs()).max().unwrap_or(0);
        GramReport {
            label,
            truncation: (abs_max(&index.outer), abs_max(&index.inner)),
            dimension: matrix.nrows(),
            index,
            hermitian_defect: linalg::hermitian_defect(&matrix),
            matrix,
            eigenvalues,
            eigen_min,
            eigen_max,
            condition_number,
            quadrature_tolerance: tol,
            identity_deviation,
            closed_form,
            verdict,
            caveat: FINITE_SECTION_CAVEAT.to_string(),
        }
    }
}

/// Truncated Gram matrix of `family` (over its own index set) on `domain`.
pub fn gram_matrix(family: &BasisFamily, domain: &Domain, opts: GramOptions) -> Result<GramReport> {
    let asm = Assembly::new(family, domain, opts)?;
    let labels = family.index.labels();
    let n = labels.len();
    let rows = opts.exec.map(n, |i| {
        (i..n)
            .map(|j| {
                asm.pair(labels[j], labels[i]).map_err(|e| Error::Quadrature {
                    row: i,
                    col: j,
                    estimate: e.error,
                    tol: opts.tol,
                })
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row?.into_iter().enumerate() {
            let j = i + off;
            if i == j {
                m[(i, i)] = Complex64::new(v.re, 0.0);
            } else {
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
    }
    Ok(GramReport::from_matrix(
        family.label.clone(),
        family.index.clone(),
        m,
        opts.tol,
        asm.is_closed_form(),
    ))
}

/// `(A_est, B_est) = (eigen_min, eigen_max)`. For a Riesz sequence, every
/// finite section's eigenvalues lie inside the true `[A, B]`, so `A_est`
/// over-estimates `A` and `B_est` under-estimates `B`.
pub fn frame_bounds(report: &GramReport) -> (f64, f64) {
    (report.eigen_min, report.eigen_max)
}
