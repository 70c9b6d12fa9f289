//! Exponential-type basis families and the isometries that carry bases
//! between rectangles, trapezoids, multi-rectangles and spherical
//! trapezoids.
//!
//! Every element has the form
//!
//! ```text
//! e_{n,k}(x, y) = w(x, y) * exp(i c (a_n(y) x + b_{n,k} y))
//! ```
//!
//! where `c` is fixed by the family's [`PhaseConvention`] (`pi` for the
//! trapezoid families on `[-1,1] x [0,1]`, `2 pi` for multi-rectangle and
//! spherical families, `1` for plain angular frequencies). Frequencies are
//! always stored in convention units; [`BasisFamily::angular_x`] and
//! [`BasisFamily::angular_y`] are the only places the scale is applied.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{unit_grid, ProfileFunction, SphericalTrapezoid, StepProfile};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// `exp(i pi (...))`
    Pi,
    /// `exp(2 pi i (...))`
    TwoPi,
    /// `exp(i (...))`
    Unit,
}

impl PhaseConvention {
    pub fn scale(self) -> f64 {
        match self {
            PhaseConvention::Pi => std::f64::consts::PI,
            PhaseConvention::TwoPi => 2.0 * std::f64::consts::PI,
            PhaseConvention::Unit => 1.0,
        }
    }

    /// Re-expresses a frequency given in `self` units in `to` units.
    pub fn convert(self, freq: f64, to: PhaseConvention) -> f64 {
        freq * self.scale() / to.scale()
    }
}

/// A finite index set `{(n, k)}`, ordered lexicographically with `n`
/// outer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    pub outer: Vec<i64>,
    pub inner: Vec<i64>,
}

impl IndexSet {
    pub fn new(outer: Vec<i64>, inner: Vec<i64>) -> IndexSet {
        IndexSet { outer, inner }
    }

    /// `{(n, k) : |n| <= nx, |k| <= ny}`.
    pub fn symmetric(nx: i64, ny: i64) -> IndexSet {
        IndexSet {
            outer: (-nx..=nx).collect(),
            inner: (-ny..=ny).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.outer.len() * self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<(i64, i64)> {
        self.outer
            .iter()
            .flat_map(|n| self.inner.iter().map(move |k| (*n, *k)))
            .collect()
    }

    pub fn position(&self, n: i64, k: i64) -> Option<usize> {
        let i = self.outer.iter().position(|v| *v == n)?;
        let j = self.inner.iter().position(|v| *v == k)?;
        Some(i * self.inner.len() + j)
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.outer.iter().all(|n| other.outer.contains(n))
            && self.inner.iter().all(|k| other.inner.contains(k))
    }
}

#[derive(Clone)]
enum GKind {
    Unperturbed,
    Ingham,
    Shrink { theta: f64 },
    Steps(Arc<Vec<StepProfile>>),
    Custom(Arc<dyn Fn(i64, f64) -> f64 + Send + Sync>),
}

/// The per-`n` functions `g_n` that replace `f` in the x-frequency
/// `n / g_n(y)`.
#[derive(Clone)]
pub struct GFamily {
    profile: ProfileFunction,
    kind: GKind,
}

impl fmt::Debug for GFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GFamily({} over {})", self.describe(), self.profile.describe())
    }
}

impl GFamily {
    /// `g_n = f`.
    pub fn unperturbed(profile: ProfileFunction) -> GFamily {
        GFamily {
            profile,
            kind: GKind::Unperturbed,
        }
    }

    /// `g_n = n f / (n - sgn(n)/4)`, `g_0 = 0`.
    pub fn ingham(profile: ProfileFunction) -> GFamily {
        GFamily {
            profile,
            kind: GKind::Ingham,
        }
    }

    /// `g_n = f / (1 + theta / (4 n^2))`, so that `|f/g_n - 1| = theta/(4 n^2)`.
    pub fn shrink(profile: ProfileFunction, theta: f64) -> GFamily {
        GFamily {
            profile,
            kind: GKind::Shrink { theta },
        }
    }

    /// `g_n = s_{|n|}` from a list of step approximations, `steps[0]` being
    /// `s_1`. Indices past the end reuse the last (finest) entry.
    pub fn from_steps(profile: ProfileFunction, steps: Vec<StepProfile>) -> Result<GFamily> {
        if steps.is_empty() {
            return Err(Error::InvalidArgument("need at least one step profile".into()));
        }
        Ok(GFamily {
            profile,
            kind: GKind::Steps(Arc::new(steps)),
        })
    }

    /// Arbitrary `g(n, y)`.
    pub fn custom<F>(profile: ProfileFunction, g: F) -> GFamily
    where
        F: Fn(i64, f64) -> f64 + Send + Sync + 'static,
    {
        GFamily {
            profile,
            kind: GKind::Custom(Arc::new(g)),
        }
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }

    pub fn is_unperturbed(&self) -> bool {
        matches!(self.kind, GKind::Unperturbed)
    }

    /// True when `f/g_n` does not depend on `y` for any `n`.
    pub fn ratio_is_y_independent(&self) -> bool {
        matches!(self.kind, GKind::Unperturbed | GKind::Ingham | GKind::Shrink { .. })
    }

    /// Points where some `g_n` (or `f`) may jump.
    pub fn jumps(&self) -> Vec<f64> {
        let mut out = self.profile.jumps().to_vec();
        if let GKind::Steps(steps) = &self.kind {
            for s in steps.iter() {
                out.extend(s.interior_boundaries());
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        out
    }

    /// `g_n(y)`.
    pub fn g(&self, n: i64, y: f64) -> f64 {
        let f = self.profile.eval(y);
        match &self.kind {
            GKind::Unperturbed => f,
            GKind::Ingham => {
                if n == 0 {
                    0.0
                } else {
                    let nf = n as f64;
                    nf * f / (nf - nf.signum() / 4.0)
                }
            }
            GKind::Shrink { theta } => {
                if n == 0 {
                    f
                } else {
                    f / (1.0 + theta / (4.0 * (n * n) as f64))
                }
            }
            GKind::Steps(steps) => {
                let i = (n.unsigned_abs() as usize).clamp(1, steps.len()) - 1;
                steps[i].eval(y)
            }
            GKind::Custom(g) => g(n, y),
        }
    }

    /// `f(y) / g_n(y)`; identically 1 at `n = 0` where the condition is
    /// vacuous.
    pub fn ratio(&self, n: i64, y: f64) -> f64 {
        if n == 0 {
            return 1.0;
        }
        let nf = n as f64;
        match &self.kind {
            GKind::Unperturbed => 1.0,
            GKind::Ingham => (nf - nf.signum() / 4.0) / nf,
            GKind::Shrink { theta } => 1.0 + theta / (4.0 * nf * nf),
            _ => self.profile.eval(y) / self.g(n, y),
        }
    }

    /// `n / g_n(y)`, defined as 0 at `n = 0`.
    pub fn x_frequency(&self, n: i64, y: f64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let nf = n as f64;
        match &self.kind {
            GKind::Unperturbed => nf / self.profile.eval(y),
            GKind::Ingham => (nf - nf.signum() / 4.0) / self.profile.eval(y),
            GKind::Shrink { theta } => nf * (1.0 + theta / (4.0 * nf * nf)) / self.profile.eval(y),
            _ => nf / self.g(n, y),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            GKind::Unperturbed => "unperturbed".into(),
            GKind::Ingham => "ingham".into(),
            GKind::Shrink { theta } => format!("shrink(theta = {theta})"),
            GKind::Steps(s) => format!("step approximations (n <= {})", s.len()),
            GKind::Custom(_) => "custom".into(),
        }
    }
}

/// Ingham's sharpness family `g_n = n f / (n - sgn(n)/4)`.
pub fn ingham_family(profile: &ProfileFunction) -> GFamily {
    GFamily::ingham(profile.clone())
}

#[derive(Clone, Debug)]
pub enum XFrequency {
    /// `factor * n`
    Linear(f64),
    /// `n / g_n(y)`
    OverProfile(GFamily),
}

impl XFrequency {
    pub fn eval(&self, n: i64, y: f64) -> f64 {
        match self {
            XFrequency::Linear(c) => c * n as f64,
            XFrequency::OverProfile(g) => g.x_frequency(n, y),
        }
    }

    pub fn is_y_independent(&self) -> bool {
        match self {
            XFrequency::Linear(_) => true,
            XFrequency::OverProfile(g) => g.profile().is_constant() && g.ratio_is_y_independent(),
        }
    }

    /// Points where the frequency may jump in `y`.
    pub fn jumps(&self) -> Vec<f64> {
        match self {
            XFrequency::Linear(_) => Vec::new(),
            XFrequency::OverProfile(g) => g.jumps(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum YFrequency {
    /// `factor * k`
    Linear(f64),
    /// Multi-rectangle y-frequencies for `N = steps`: `(n mod N) + k N` in
    /// the original coordinates, or `(n mod N)/N + k` on the dilated
    /// unit-height rows.
    RemainderShift { steps: i64, dilated: bool },
    /// Explicit `(n, k) -> frequency` table from a per-`n` selector.
    Table(Arc<BTreeMap<(i64, i64), f64>>),
}

impl YFrequency {
    pub fn eval(&self, n: i64, k: i64) -> f64 {
        match self {
            YFrequency::Linear(c) => c * k as f64,
            YFrequency::RemainderShift { steps, dilated } => {
                let s = remainder_shift(n, *steps, k);
                if *dilated {
                    s.dilated()
                } else {
                    s.original() as f64
                }
            }
            YFrequency::Table(t) => t.get(&(n, k)).copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Weight {
    Unit,
    Constant(f64),
    /// `(2 f(y))^{-1/2}`
    Trapezoid(ProfileFunction),
    /// `(|S^{d-2}| f(y))^{-1/2} r^{-(d-2)/2}`
    Radial { profile: ProfileFunction, dim: usize, sphere: f64 },
}

impl Weight {
    /// The y-dependent factor (the radial power of `r` excluded).
    pub fn y_factor(&self, y: f64) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Constant(c) => *c,
            Weight::Trapezoid(p) => (2.0 * p.eval(y)).powf(-0.5),
            Weight::Radial { profile, sphere, .. } => (sphere * profile.eval(y)).powf(-0.5),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Weight::Radial { dim, .. } => {
                self.y_factor(y) * x.abs().powf(-((*dim as f64) - 2.0) / 2.0)
            }
            _ => self.y_factor(y),
        }
    }

    pub fn is_y_independent(&self) -> bool {
        match self {
            Weight::Unit | Weight::Constant(_) => true,
            Weight::Trapezoid(p) | Weight::Radial { profile: p, .. } => p.is_constant(),
        }
    }

    pub fn jumps(&self) -> Vec<f64> {
        match self {
            Weight::Unit | Weight::Constant(_) => Vec::new(),
            Weight::Trapezoid(p) | Weight::Radial { profile: p, .. } => p.jumps().to_vec(),
        }
    }

    /// Exponent `q` of the radial factor `r^q` (0 for planar weights).
    pub fn radial_power(&self) -> f64 {
        match self {
            Weight::Radial { dim, .. } => -((*dim as f64) - 2.0) / 2.0,
            _ => 0.0,
        }
    }

    fn describe(&self) -> String {
        match self {
            Weight::Unit => "1".into(),
            Weight::Constant(c) => format!("{c}"),
            Weight::Trapezoid(_) => "(2 f(y))^(-1/2)".into(),
            Weight::Radial { dim, .. } => format!("(|S^{}| f(y))^(-1/2) r^(-{}/2)", dim - 2, dim - 2),
        }
    }
}

/// A truncated doubly-indexed family of exponential-type functions.
#[derive(Clone, Debug)]
pub struct BasisFamily {
    pub label: String,
    pub convention: PhaseConvention,
    pub index: IndexSet,
    pub x_freq: XFrequency,
    pub y_freq: YFrequency,
    pub weight: Weight,
}

impl BasisFamily {
    /// Angular x-frequency `c a_n(y)`.
    pub fn angular_x(&self, n: i64, y: f64) -> f64 {
        self.convention.scale() * self.x_freq.eval(n, y)
    }

    /// Angular y-frequency `c b_{n,k}`.
    pub fn angular_y(&self, n: i64, k: i64) -> f64 {
        self.convention.scale() * self.y_freq.eval(n, k)
    }

    pub fn element(&self, n: i64, k: i64) -> Element<'_> {
        Element { family: self, n, k }
    }

    pub fn with_index(mut self, index: IndexSet) -> BasisFamily {
        self.index = index;
        self
    }

    pub fn with_weight(mut self, weight: Weight) -> BasisFamily {
        self.weight = weight;
        self
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// True when neither frequencies nor weight depend on `y`.
    pub fn is_separable(&self) -> bool {
        self.x_freq.is_y_independent() && self.weight.is_y_independent()
    }

    /// JSON-friendly description, with `f/g_n` sampled on `audit_points`
    /// uniform points when the family is perturbed.
    pub fn summary(&self, audit_points: usize) -> FamilySummary {
        let (x_desc, table) = match &self.x_freq {
            XFrequency::Linear(c) => (format!("{c} * n"), None),
            XFrequency::OverProfile(g) => {
                let table = if g.is_unperturbed() {
                    None
                } else {
                    let ys: Vec<f64> = unit_grid(audit_points.max(2)).collect();
                    Some(PerturbationTable {
                        rows: self
                            .index
                            .outer
                            .iter()
                            .map(|n| PerturbationRow {
                                n: *n,
                                ratio: ys.iter().map(|y| g.ratio(*n, *y)).collect(),
                            })
                            .collect(),
                        ys,
                    })
                };
                (format!("n / g_n(y), g = {}", g.describe()), table)
            }
        };
        let y_desc = match &self.y_freq {
            YFrequency::Linear(c) => format!("{c} * k"),
            YFrequency::RemainderShift { steps, dilated: false } => format!("(n mod {steps}) + {steps} k"),
            YFrequency::RemainderShift { steps, dilated: true } => format!("(n mod {steps})/{steps} + k"),
            YFrequency::Table(_) => "selector table".into(),
        };
        let y_frequencies = self
            .index
            .labels()
            .into_iter()
            .map(|(n, k)| [n as f64, k as f64, self.y_freq.eval(n, k)])
            .collect();
        FamilySummary {
            label: self.label.clone(),
            convention: self.convention,
            index: self.index.clone(),
            x_frequency: x_desc,
            y_frequency: y_desc,
            weight: self.weight.describe(),
            y_frequencies,
            perturbation: table,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub n: i64,
    /// `f(y)/g_n(y)` at the table's `ys`.
    pub ratio: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTable {
    pub ys: Vec<f64>,
    pub rows: Vec<PerturbationRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub label: String,
    pub convention: PhaseConvention,
    pub index: IndexSet,
    pub x_frequency: String,
    pub y_frequency: String,
    pub weight: String,
    /// `[n, k, y-frequency]` triples in index order.
    pub y_frequencies: Vec<[f64; 3]>,
    pub perturbation: Option<PerturbationTable>,
}

/// One element of a family.
#[derive(Clone, Copy, Debug)]
pub struct Element<'a> {
    pub family: &'a BasisFamily,
    pub n: i64,
    pub k: i64,
}

impl Element<'_> {
    /// Value at `(x, y)`; for radial families `x` is `r = |x'|`.
    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let f = self.family;
        let phase = f.angular_x(self.n, y) * x + f.angular_y(self.n, self.k) * y;
        Complex64::from_polar(f.weight.eval(x, y), phase)
    }
}

const ZERO_GUARD: f64 = 1e-300;

/// `{ exp(i pi (n x / g_n(y) + 2 k y)) }` on the trapezoid bounded by
/// `profile`, optionally weighted by `(2 f(y))^{-1/2}` (which makes the
/// unperturbed family orthonormal).
pub fn trapezoid_basis(
    profile: &ProfileFunction,
    g_family: Option<GFamily>,
    index: IndexSet,
    weighted: bool,
) -> Result<BasisFamily> {
    let g = g_family.unwrap_or_else(|| GFamily::unperturbed(profile.clone()));
    if !g.is_unperturbed() {
        for &n in index.outer.iter().filter(|n| **n != 0) {
            for y in unit_grid(1001) {
                let v = g.g(n, y);
                if !(v.is_finite() && v.abs() > ZERO_GUARD) {
                    return Err(Error::VanishingPerturbation { n, y });
                }
            }
        }
    }
    Ok(BasisFamily {
        label: format!("trapezoid family ({}){}", g.describe(), if weighted { ", weighted" } else { "" }),
        convention: PhaseConvention::Pi,
        index,
        x_freq: XFrequency::OverProfile(g),
        y_freq: YFrequency::Linear(2.0),
        weight: if weighted {
            Weight::Trapezoid(profile.clone())
        } else {
            Weight::Unit
        },
    })
}

/// `{ exp(2 pi i (n |x'| / f(y) + k y)) }` on a spherical trapezoid,
/// optionally weighted by `(|S^{d-2}| f(y))^{-1/2} r^{-(d-2)/2}`.
pub fn spherical_basis(sph: &SphericalTrapezoid, index: IndexSet, weighted: bool) -> BasisFamily {
    BasisFamily {
        label: format!("spherical family d = {}{}", sph.dim(), if weighted { ", weighted" } else { "" }),
        convention: PhaseConvention::TwoPi,
        index,
        x_freq: XFrequency::OverProfile(GFamily::unperturbed(sph.profile.clone())),
        y_freq: YFrequency::Linear(1.0),
        weight: if weighted {
            Weight::Radial {
                profile: sph.profile.clone(),
                dim: sph.dim(),
                sphere: sph.sphere_measure(),
            }
        } else {
            Weight::Unit
        },
    }
}

/// Product family `{ v_n(x) w_{n(m)}(y) }` with `v_n = exp(i c factor n x)`
/// and the y-frequency of `w_{n(m)}` given by `selector(n, m)`.
pub fn tensor_basis<S>(
    convention: PhaseConvention,
    x_factor: f64,
    index: IndexSet,
    selector: S,
) -> Result<BasisFamily>
where
    S: Fn(i64, i64) -> Option<f64>,
{
    let mut table = BTreeMap::new();
    for (n, m) in index.labels() {
        let v = selector(n, m).ok_or(Error::MissingSelector(n))?;
        table.insert((n, m), v);
    }
    Ok(BasisFamily {
        label: "tensor family".into(),
        convention,
        index,
        x_freq: XFrequency::Linear(x_factor),
        y_freq: YFrequency::Table(Arc::new(table)),
        weight: Weight::Unit,
    })
}

/// The y-frequency paired with `n_k` on a multi-rectangle with `N` steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftedFrequency {
    pub n_k: i64,
    pub steps: i64,
    pub h: i64,
    /// `n_k mod N`, in `0..N`.
    pub remainder: i64,
}

impl ShiftedFrequency {
    /// Integer frequency `(n_k mod N) + h N` in the original coordinates.
    pub fn original(&self) -> i64 {
        self.remainder + self.h * self.steps
    }

    /// Frequency `(n_k mod N)/N + h` on the dilated unit-height rows.
    pub fn dilated(&self) -> f64 {
        self.remainder as f64 / self.steps as f64 + self.h as f64
    }

    /// Whether the translation by `v_j` leaves the phase unchanged:
    /// `(j-1)(n_k/N - m) = (j-1)(n_k - original)/N` is an integer.
    pub fn phase_consistent(&self, j: i64) -> bool {
        ((j - 1) * (self.n_k - self.original())).rem_euclid(self.steps) == 0
    }
}

/// `m_h` for the pair `(n_k, h)`.
pub fn remainder_shift(n_k: i64, steps: i64, h: i64) -> ShiftedFrequency {
    assert!(steps >= 1, "step count must be positive");
    let s = ShiftedFrequency {
        n_k,
        steps,
        h,
        remainder: n_k.rem_euclid(steps),
    };
    assert!((1..=steps).all(|j| s.phase_consistent(j)));
    s
}

/// Phase predicate for an integer y-frequency `m` on the dilated rows:
/// `(j-1)(n_k/N - m)` is an integer.
pub fn integer_pairing_consistent(n_k: i64, steps: i64, m: i64, j: i64) -> bool {
    ((j - 1) * (n_k - steps * m)).rem_euclid(steps) == 0
}

#[derive(Clone, Debug)]
pub enum IsometryMap {
    /// `L^2([-1,1] x [0,1]) -> L^2(T)`,
    /// `psi |-> f(y)^{-1/2} psi(x / f(y), y)`.
    RectangleToTrapezoid { profile: ProfileFunction },
    /// `L^2(I x (0,1)) -> L^2(R)` for a multi-rectangle `R` in original
    /// coordinates: rows are dilated by `N` in `y`, translated by `v_j`, and
    /// the result is scaled by `sqrt(N)` (the dilation Jacobian).
    MultirectTiling { step: StepProfile },
    /// `L^2([0,1] x [0,1]) -> L^2_S(T)`,
    /// `psi |-> (|S| f(y))^{-1/2} r^{-(d-2)/2} psi(r / f(y), y)`.
    Radial { sph: SphericalTrapezoid },
}

impl IsometryMap {
    /// `y`-dilation applied by the map (`N` for multi-rectangles, else 1).
    pub fn dilation(&self) -> f64 {
        match self {
            IsometryMap::MultirectTiling { step } => step.steps() as f64,
            _ => 1.0,
        }
    }
}

/// `Lambda psi`, evaluable on the target domain.
pub struct Lifted<'a, F> {
    map: &'a IsometryMap,
    source: F,
}

pub fn lift_by_isometry<F>(map: &IsometryMap, source: F) -> Lifted<'_, F>
where
    F: Fn(f64, f64) -> Complex64,
{
    Lifted { map, source }
}

impl<F> Lifted<'_, F>
where
    F: Fn(f64, f64) -> Complex64,
{
    /// Evaluates at `(x, y)`; for the radial map `x` is `r = |x'|`.
    /// Multi-rectangle lifts vanish off the domain; the other maps reject
    /// points outside it.
    pub fn eval(&self, x: f64, y: f64) -> Result<Complex64> {
        match self.map {
            IsometryMap::RectangleToTrapezoid { profile } => {
                let f = profile.eval(y);
                if !(0.0..=1.0).contains(&y) || x.abs() > f {
                    return Err(Error::OutsideDomain { x, y });
                }
                Ok((self.source)(x / f, y) / f.sqrt())
            }
            IsometryMap::MultirectTiling { step } => {
                if !(0.0..=1.0).contains(&y) {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let j = step.cell_of(y);
                if x.abs() > step.values()[j] {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let n = step.steps() as f64;
                let jf = j as f64;
                Ok((self.source)(x + 2.0 * jf, n * y - jf) * n.sqrt())
            }
            IsometryMap::Radial { sph } => {
                let f = sph.profile.eval(y);
                if !(0.0..=1.0).contains(&y) || !(0.0..=f).contains(&x) {
                    return Err(Error::OutsideDomain { x, y });
                }
                let d = sph.dim() as f64;
                let w = (sph.sphere_measure() * f).powf(-0.5) * x.powf(-(d - 2.0) / 2.0);
                Ok((self.source)(x / f, y) * w)
            }
        }
    }

    /// Radial evaluation at a point `x'` of `R^{d-1}`.
    pub fn eval_point(&self, x_prime: &[f64], y: f64) -> Result<Complex64> {
        match self.map {
            IsometryMap::Radial { sph } if x_prime.len() + 1 == sph.dim() => {
                let r = x_prime.iter().map(|v| v * v).sum::<f64>().sqrt();
                self.eval(r, y)
            }
            IsometryMap::Radial { sph } => Err(Error::Mismatch(format!(
                "point has {} coordinates, expected {}",
                x_prime.len(),
                sph.dim() - 1
            ))),
            _ if x_prime.len() == 1 => self.eval(x_prime[0], y),
            _ => Err(Error::Mismatch("planar maps take one x coordinate".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn rectangle_family_is_standard_orthonormal_family() {
        let f = ProfileFunction::constant(1.0).unwrap();
        let fam = trapezoid_basis(&f, None, IndexSet::symmetric(2, 2), true).unwrap();
        let e = fam.element(2, -1);
        let (x, y) = (0.3, 0.7);
        let expected = Complex64::from_polar(2f64.powf(-0.5), PI * (2.0 * x - 2.0 * y));
        assert!(close(e.eval(x, y), expected, 1e-15));
        assert_eq!(fam.x_freq.eval(0, 0.4), 0.0);
    }

    #[test]
    fn x_frequency_over_linear_profile() {
        let f = ProfileFunction::closed_form("1+y/2", 1.0, 1.5).unwrap();
        let fam = trapezoid_basis(&f, None, IndexSet::symmetric(3, 0), false).unwrap();
        for y in [0.0, 0.25, 1.0] {
            assert!((fam.x_freq.eval(3, y) - 3.0 / (1.0 + y / 2.0)).abs() < 1e-15);
            // unperturbed families satisfy freq * f = n
            assert!((fam.x_freq.eval(-2, y) * f.eval(y) + 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ingham_frequencies() {
        let one = ProfileFunction::constant(1.0).unwrap();
        let g = ingham_family(&one);
        assert!((g.g(1, 0.5) - 4.0 / 3.0).abs() < 1e-15);
        assert!((g.x_frequency(1, 0.5) - 0.75).abs() < 1e-15);
        assert!((g.x_frequency(-2, 0.5) + 1.75).abs() < 1e-15);
        assert_eq!(g.g(0, 0.5), 0.0);
        assert_eq!(g.x_frequency(0, 0.5), 0.0);

        let lin = ProfileFunction::closed_form("1+y/2", 1.0, 1.5).unwrap();
        let g = ingham_family(&lin);
        for y in [0.0, 0.3, 1.0] {
            assert!((g.g(1, y) - 4.0 / 3.0 * (1.0 + y / 2.0)).abs() < 1e-15);
            assert!((lin.eval(y) / g.g(1, y) - 1.0 + 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishing_perturbation_rejected() {
        let f = ProfileFunction::constant(1.0).unwrap();
        let g = GFamily::custom(f.clone(), |n, y| if n == 2 { y - 0.5 } else { 1.0 });
        assert!(matches!(
            trapezoid_basis(&f, Some(g), IndexSet::symmetric(2, 0), false),
            Err(Error::VanishingPerturbation { n: 2, .. })
        ));
    }

    #[test]
    fn remainder_shift_examples() {
        let s = remainder_shift(0, 5, 3);
        assert_eq!((s.remainder, s.dilated()), (0, 3.0));
        assert_eq!(s.original(), 15);

        // The integer pairing m = (n_k mod N) + h fails the phase predicate,
        // the fractional shift passes it.
        let s = remainder_shift(5, 2, 3);
        assert_eq!(s.remainder, 1);
        assert!(!integer_pairing_consistent(5, 2, 1 + 3, 2));
        assert_eq!(s.original(), 7);
        assert_eq!(s.dilated(), 3.5);
        assert!((1..=2).all(|j| s.phase_consistent(j)));

        let s = remainder_shift(7, 3, 0);
        assert_eq!(s.remainder, 1);
        assert_eq!(s.original(), 1);
        assert!((1..=3).all(|j| s.phase_consistent(j)));
        assert!(!integer_pairing_consistent(7, 3, 1, 2));

        let s = remainder_shift(-1, 3, 0);
        assert_eq!(s.remainder, 2);
    }

    proptest! {
        #[test]
        fn phase_identity_holds_in_integer_arithmetic(
            n_k in -500i64..500, steps in 1i64..12, h in -50i64..50
        ) {
            let s = remainder_shift(n_k, steps, h);
            for j in 1..=steps {
                prop_assert!(s.phase_consistent(j));
            }
            prop_assert!((0..steps).contains(&s.remainder));
        }
    }

    #[test]
    fn rectangle_map_with_unit_profile_is_identity() {
        let map = IsometryMap::RectangleToTrapezoid {
            profile: ProfileFunction::constant(1.0).unwrap(),
        };
        let psi = |x: f64, y: f64| Complex64::from_polar(1.0, 3.0 * x - y);
        let lifted = lift_by_isometry(&map, psi);
        for (x, y) in [(0.2, 0.1), (-0.9, 0.99), (1.0, 0.0)] {
            assert!(close(lifted.eval(x, y).unwrap(), psi(x, y), 1e-15));
        }
        assert!(lifted.eval(1.5, 0.5).is_err());
    }

    #[test]
    fn multirect_map_matches_direct_formula() {
        let step = StepProfile::new(vec![1.0, 1.0]).unwrap();
        let map = IsometryMap::MultirectTiling { step };
        // n_k = 3, N = 2: lambda = 3/4, h = 1 -> dilated m = 1/2 + 1
        let s = remainder_shift(3, 2, 1);
        let lam = 3.0 / 4.0;
        let psi = |x: f64, y: f64| Complex64::from_polar(1.0, 2.0 * PI * (lam * x + s.dilated() * y));
        let lifted = lift_by_isometry(&map, psi);
        for (x, y) in [(0.1, 0.2), (-0.7, 0.6), (0.95, 0.9)] {
            let direct = Complex64::from_polar(2f64.sqrt(), 2.0 * PI * (lam * x + s.original() as f64 * y));
            assert!(close(lifted.eval(x, y).unwrap(), direct, 1e-12));
        }
        assert_eq!(lifted.eval(0.2, 1.5).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn radial_map_in_dimension_two_is_plain_composition() {
        let sph = SphericalTrapezoid::new(ProfileFunction::constant(1.0).unwrap(), 2).unwrap();
        let map = IsometryMap::Radial { sph };
        let psi = |r: f64, y: f64| Complex64::from_polar(1.0, 2.0 * PI * (2.0 * r + y));
        let lifted = lift_by_isometry(&map, psi);
        assert!(close(lifted.eval_point(&[-0.4], 0.3).unwrap(), psi(0.4, 0.3), 1e-15));
        assert!(lifted.eval(1.2, 0.3).is_err());
    }

    #[test]
    fn spherical_weight_in_dimension_three() {
        let sph = SphericalTrapezoid::new(ProfileFunction::constant(1.0).unwrap(), 3).unwrap();
        let fam = spherical_basis(&sph, IndexSet::symmetric(1, 1), true);
        let w = fam.weight.eval(0.25, 0.5);
        assert!((w - (2.0 * PI).powf(-0.5) * 0.25f64.powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn tensor_selector_must_cover_index_set() {
        let idx = IndexSet::symmetric(1, 1);
        let err = tensor_basis(PhaseConvention::TwoPi, 1.0, idx.clone(), |n, m| {
            if n == 1 { None } else { Some(m as f64) }
        });
        assert!(matches!(err, Err(Error::MissingSelector(1))));
        let ok = tensor_basis(PhaseConvention::TwoPi, 1.0, idx, |_, m| Some(m as f64)).unwrap();
        assert_eq!(ok.y_freq.eval(-1, 1), 1.0);
    }

    #[test]
    fn convention_conversion() {
        assert_eq!(PhaseConvention::TwoPi.convert(1.5, PhaseConvention::Pi), 3.0);
        assert_eq!(PhaseConvention::Pi.convert(2.0, PhaseConvention::TwoPi), 1.0);
        let idx = IndexSet::symmetric(2, 1);
        assert_eq!(idx.labels()[0], (-2, -1));
        assert_eq!(idx.position(0, 1), Some(2 * 3 + 2));
        assert!(IndexSet::symmetric(1, 1).is_subset_of(&idx));
    }
}
