use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{gram_matrix, segment_integral, weighted_integral, Assembly, Domain, GramOptions, GramReport, COND_LIMIT};
use crate::bases::{BasisFamily, IndexSet};
use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::quadrature::integrate;

/// A square-integrable function on the domain to be expanded.
#[derive(Clone)]
pub enum Target {
    /// An element `e_{n,k}` of the family itself.
    Element { n: i64, k: i64 },
    /// Indicator of `[x0, x1] x [y0, y1]` (in `(r, y)` for radial domains).
    BoxIndicator { x: (f64, f64), y: (f64, f64) },
    Constant(f64),
    Function {
        label: String,
        f: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
    },
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl Target {
    pub fn describe(&self) -> String {
        match self {
            Target::Element { n, k } => format!("element ({n}, {k})"),
            Target::BoxIndicator { x, y } => {
                format!("indicator of [{}, {}] x [{}, {}]", x.0, x.1, y.0, y.1)
            }
            Target::Constant(c) => format!("constant {c}"),
            Target::Function { label, .. } => format!("function {label}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub target: String,
    pub truncation: (i64, i64),
    pub index: IndexSet,
    pub dimension: usize,
    /// Solution of `G c = b`, as `[re, im]` pairs in index order.
    pub coefficients: Vec<[f64; 2]>,
    pub target_norm: f64,
    pub residual: f64,
    pub relative_residual: f64,
    pub condition_number: f64,
}

fn quad_error(opts: &GramOptions, e: crate::quadrature::QuadFailure, row: usize) -> Error {
    Error::Quadrature {
        row,
        col: row,
        estimate: e.error,
        tol: opts.tol,
    }
}

/// `(b, ||t||^2)` for box, constant and function targets.
pub(super) fn moments_for(asm: &Assembly<'_>, target: &Target) -> Result<(Vec<Complex64>, f64)> {
    let fam = asm.family;
    let dom = asm.domain;
    let (ya, yb) = dom.y_range();
    let (clip, yr, scale) = match target {
        Target::BoxIndicator { x, y } => (Some(*x), (y.0.max(ya), y.1.min(yb)), 1.0),
        Target::Constant(c) => (None, (ya, yb), *c),
        Target::Function { .. } => (None, (ya, yb), 1.0),
        Target::Element { .. } => unreachable!("element targets use the Gram matrix"),
    };
    if yr.1 <= yr.0 {
        return Err(Error::Mismatch(format!("{} does not meet the domain", target.describe())));
    }
    let q = asm.weight_power;
    let labels = fam.index.labels();

    let function_part = |y: f64, theta: f64, power: f64, square: bool| -> Complex64 {
        let Target::Function { f, .. } = target else {
            unreachable!()
        };
        let p = dom.measure_power() + power;
        let g = |x: f64| {
            let v = f(x, y);
            if square {
                Complex64::new(v.norm_sqr(), 0.0)
            } else {
                v
            }
        };
        dom.cross_section(y)
            .into_iter()
            .map(|(l, r)| weighted_integral(l, r, theta, p, &g, 4))
            .sum::<Complex64>()
            * dom.sphere()
    };
    // x-part of <t, e_i> at height y, without the y-exponential
    let xpart = |y: f64, n: i64| -> Complex64 {
        let w = fam.weight.y_factor(y);
        let theta = -fam.angular_x(n, y);
        let v = match target {
            Target::Function { .. } => function_part(y, theta, q, false),
            _ => dom.section_integral(y, theta, q, clip),
        };
        v * (w * scale)
    };
    let norm_part = |y: f64| -> f64 {
        match target {
            Target::Function { .. } => function_part(y, 0.0, 0.0, true).re,
            _ => scale * scale * dom.section_integral(y, 0.0, 0.0, clip).re,
        }
    };

    let closed_cells: Option<Vec<(f64, f64)>> = match (asm.cells(), target) {
        (Some(cells), Target::BoxIndicator { .. } | Target::Constant(_)) => Some(
            cells
                .iter()
                .map(|(a, b)| (a.max(yr.0), b.min(yr.1)))
                .filter(|(a, b)| b > a)
                .collect(),
        ),
        _ => None,
    };

    if let Some(cells) = closed_cells {
        let b = labels
            .iter()
            .map(|(n, k)| {
                let beta = -fam.angular_y(*n, *k);
                cells
                    .iter()
                    .map(|(a, c)| xpart(0.5 * (a + c), *n) * segment_integral(*a, *c, beta))
                    .sum()
            })
            .collect();
        let norm = cells.iter().map(|(a, c)| norm_part(0.5 * (a + c)) * (c - a)).sum();
        return Ok((b, norm));
    }

    let mut breaks = asm.quad_breaks();
    breaks.extend([yr.0, yr.1]);
    breaks.retain(|v| *v >= yr.0 && *v <= yr.1);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let opts = asm.opts;
    let b = opts
        .exec
        .map(labels.len(), |i| {
            let (n, k) = labels[i];
            let beta = -fam.angular_y(n, k);
            integrate(
                |y| xpart(y, n) * Complex64::from_polar(1.0, beta * y),
                &breaks,
                asm.seed_panels(beta),
                opts.quad(),
            )
            .map(|r| r.value)
            .map_err(|e| quad_error(&opts, e, i))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let norm = integrate(|y| Complex64::new(norm_part(y), 0.0), &breaks, 1, opts.quad())
        .map_err(|e| quad_error(&opts, e, 0))?
        .value
        .re;
    Ok((b, norm))
}

/// Least-squares expansion of `target` in the truncated family.
pub fn reconstruct(target: &Target, family: &BasisFamily, domain: &Domain, opts: GramOptions) -> Result<ReconstructionReport> {
    let gram = gram_matrix(family, domain, opts)?;
    reconstruct_with_gram(target, family, domain, &gram, opts)
}

/// As [`reconstruct`], reusing an already assembled Gram matrix of the same
/// family and domain.
pub fn reconstruct_with_gram(
    target: &Target,
    family: &BasisFamily,
    domain: &Domain,
    gram: &GramReport,
    opts: GramOptions,
) -> Result<ReconstructionReport> {
    if gram.index != family.index || gram.matrix.nrows() != family.len() {
        return Err(Error::Mismatch("Gram matrix does not belong to this family".into()));
    }
    if !(gram.condition_number <= COND_LIMIT) {
        return Err(Error::IllConditioned(gram.condition_number));
    }
    let g = &gram.matrix;
    let asm = Assembly::new(family, domain, opts)?;

    // Element targets inside the index set have the exact expansion e_j.
    let mut exact: Option<CVector> = None;
    let (b, norm2) = match target {
        Target::Element { n, k } => match family.index.position(*n, *k) {
            Some(j) => {
                let mut e = CVector::zeros(family.len());
                e[j] = Complex64::new(1.0, 0.0);
                exact = Some(e);
                (g.column(j).iter().copied().collect(), g[(j, j)].re)
            }
            None => {
                let b = family
                    .index
                    .labels()
                    .into_iter()
                    .map(|l| asm.pair((*n, *k), l))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| quad_error(&opts, e, 0))?;
                let nn = asm.pair((*n, *k), (*n, *k)).map_err(|e| quad_error(&opts, e, 0))?;
                (b, nn.re)
            }
        },
        _ => moments_for(&asm, target)?,
    };
    if !(norm2 > 0.0) {
        return Err(Error::Mismatch(format!("{} has zero norm on the domain", target.describe())));
    }
    let b = CVector::from_vec(b);
    let c = linalg::solve_hermitian(g, &b).ok_or(Error::IllConditioned(gram.condition_number))?;
    let res2 = match exact {
        Some(e) => {
            let d = &c - e;
            linalg::quadratic_form(g, &d, &d).re
        }
        None => norm2 - 2.0 * c.dotc(&b).re + linalg::quadratic_form(g, &c, &c).re,
    };
    let residual = res2.max(0.0).sqrt();
    let target_norm = norm2.sqrt();
    Ok(ReconstructionReport {
        target: target.describe(),
        truncation: gram.truncation,
        index: family.index.clone(),
        dimension: family.len(),
        coefficients: c.iter().map(|z| [z.re, z.im]).collect(),
        target_norm,
        residual,
        relative_residual: residual / target_norm,
        condition_number: gram.condition_number,
    })
}
