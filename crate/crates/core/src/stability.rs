//! Kadec-type perturbation checks, the Paley–Wiener constant
//! `1 - cos L + sin L`, and Monte Carlo probing of the Paley–Wiener
//! inequality.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bases::{GFamily, IndexSet};
use crate::domains::{unit_grid, ProfileFunction};
use crate::error::{Error, Result};
use crate::gram::segment_integral;
use crate::linalg::{self, CMatrix, CVector};
use crate::par::Execution;
use crate::quadrature::{integrate, QuadOptions};

pub use crate::bases::ingham_family;

/// Tolerance for declaring `eps_n` equal to `1/(4|n|)`.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Largest relative change of `eps_n` allowed under one grid refinement.
pub const REFINEMENT_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KadecVerdict {
    Certified,
    Boundary,
    Violated,
}

impl KadecVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            KadecVerdict::Certified => "certified",
            KadecVerdict::Boundary => "boundary",
            KadecVerdict::Violated => "violated",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KadecRow {
    pub n: i64,
    /// Grid sup of `|f/g_n - 1|` on the refined grid.
    pub epsilon: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KadecReport {
    pub per_n: Vec<KadecRow>,
    /// `max_n pi |n| eps_n`.
    pub l: f64,
    /// `1 - cos L + sin L`, present only when `L < pi/4`.
    pub lambda: Option<f64>,
    pub verdict: KadecVerdict,
    pub grid: usize,
    pub refined_grid: usize,
}

fn sup_deviation(profile: &ProfileFunction, g: &GFamily, n: i64, grid: usize, exec: Execution) -> Result<f64> {
    let ys: Vec<f64> = unit_grid(grid).collect();
    let vals = exec.map(ys.len(), |i| {
        let y = ys[i];
        let gv = g.g(n, y);
        if !(gv.is_finite() && gv.abs() > 1e-300) {
            return Err(Error::VanishingPerturbation { n, y });
        }
        let ratio = if g.ratio_is_y_independent() {
            g.ratio(n, y)
        } else {
            profile.eval(y) / gv
        };
        Ok((ratio - 1.0).abs())
    });
    let mut sup = 0.0f64;
    for v in vals {
        sup = sup.max(v?);
    }
    Ok(sup)
}

/// Checks `sup_y |f/g_n - 1| < 1/(4|n|)` for `0 < |n| <= n_max`.
///
/// Every sup is taken on `grid` points and again on the refined grid of
/// `2 grid - 1` points; the refined value is reported.
pub fn kadec_check(profile: &ProfileFunction, g_family: &GFamily, n_max: i64, grid: usize, exec: Execution) -> Result<KadecReport> {
    if grid < 2 {
        return Err(Error::GridTooSmall(grid));
    }
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let refined = 2 * grid - 1;
    let ns: Vec<i64> = (-n_max..=n_max).filter(|n| *n != 0).collect();
    let mut per_n = Vec::with_capacity(ns.len());
    let mut l = 0.0f64;
    let mut any_violated = false;
    let mut any_boundary = false;
    for n in ns {
        let coarse = sup_deviation(profile, g_family, n, grid, exec)?;
        let fine = sup_deviation(profile, g_family, n, refined, exec)?;
        if (fine - coarse).abs() > REFINEMENT_TOL * fine.abs() + 1e-14 {
            return Err(Error::GridTooCoarse { n, coarse, fine });
        }
        let threshold = 1.0 / (4.0 * n.unsigned_abs() as f64);
        let boundary = (fine - threshold).abs() <= BOUNDARY_TOL;
        let violated = !boundary && fine > threshold;
        any_boundary |= boundary;
        any_violated |= violated;
        l = l.max(PI * n.unsigned_abs() as f64 * fine);
        per_n.push(KadecRow {
            n,
            epsilon: fine,
            threshold,
            pass: !boundary && !violated,
        });
    }
    let lambda = pw_bound(l).ok();
    let verdict = if any_violated {
        KadecVerdict::Violated
    } else if any_boundary {
        KadecVerdict::Boundary
    } else if lambda.is_some() {
        KadecVerdict::Certified
    } else {
        KadecVerdict::Violated
    };
    Ok(KadecReport {
        per_n,
        l,
        lambda,
        verdict,
        grid,
        refined_grid: refined,
    })
}

/// `1 - cos L + sin L` for `0 <= L < pi/4`.
pub fn pw_bound(l: f64) -> Result<f64> {
    if !(0.0..FRAC_PI_4).contains(&l) {
        return Err(Error::LOutOfRange(l));
    }
    let h = (0.5 * l).sin();
    Ok(2.0 * h * h + l.sin())
}

#[derive(Clone, Copy, Debug)]
pub struct PwOptions {
    pub trials: usize,
    pub seed: u64,
    /// Ratios up to `1 + ratio_tol` are accepted.
    pub ratio_tol: f64,
    /// Grid for the prerequisite Kadec check.
    pub grid: usize,
    pub quad_tol: f64,
    pub exec: Execution,
}

impl Default for PwOptions {
    fn default() -> Self {
        PwOptions {
            trials: 100,
            seed: 0,
            ratio_tol: 1e-4,
            grid: 1001,
            quad_tol: 1e-12,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwReport {
    pub l: f64,
    pub lambda: f64,
    pub index: IndexSet,
    pub trials: usize,
    pub seed: u64,
    /// `LHS / lambda` per trial.
    pub ratios: Vec<f64>,
    pub max_lhs: f64,
    pub max_ratio: f64,
    pub argmax_trial: usize,
    /// `sqrt(lambda_max(D))`: the sup of the left side over unit vectors.
    pub sup_lhs: f64,
    pub sup_ratio: f64,
}

/// `2 sin(theta)/theta = int_{-1}^{1} exp(i theta s) ds`.
fn two_sinc(theta: f64) -> f64 {
    segment_integral(-1.0, 1.0, theta).re
}

/// Gram matrix `D` of the differences `(u_{n,k} - e_{n,k})` pulled back to
/// `[-1,1] x [0,1]`, where `u = exp(i pi (n s + 2 k y))/sqrt 2` and
/// `e = exp(i pi (n s f/g_n + 2 k y))/sqrt 2`.
pub fn difference_gram(g_family: &GFamily, index: &IndexSet, quad_tol: f64, exec: Execution) -> Result<CMatrix> {
    let labels = index.labels();
    let dim = labels.len();
    let kernel = |a: (i64, i64), b: (i64, i64), y: f64| -> f64 {
        let (na, nb) = (a.0 as f64, b.0 as f64);
        let (ra, rb) = (g_family.ratio(a.0, y), g_family.ratio(b.0, y));
        0.5 * (two_sinc(PI * (na - nb)) - two_sinc(PI * (na - nb * rb)) - two_sinc(PI * (na * ra - nb))
            + two_sinc(PI * (na * ra - nb * rb)))
    };
    let closed = g_family.ratio_is_y_independent();
    let mut breaks = vec![0.0];
    breaks.extend(g_family.jumps());
    breaks.push(1.0);
    let opts = QuadOptions {
        abs_tol: quad_tol,
        ..QuadOptions::default()
    };
    let rows = exec.map(dim, |i| {
        (i..dim)
            .map(|j| {
                let (a, b) = (labels[j], labels[i]);
                let beta = 2.0 * PI * (a.1 - b.1) as f64;
                if closed {
                    Ok(segment_integral(0.0, 1.0, beta) * kernel(a, b, 0.5))
                } else {
                    let seed = 1 + (beta.abs() / (2.0 * PI)).ceil() as usize;
                    integrate(
                        |y| Complex64::from_polar(kernel(a, b, y), beta * y),
                        &breaks,
                        seed,
                        opts,
                    )
                    .map(|r| r.value)
                    .map_err(|e| Error::Quadrature {
                        row: i,
                        col: j,
                        estimate: e.error,
                        tol: quad_tol,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut d = CMatrix::zeros(dim, dim);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row?.into_iter().enumerate() {
            let j = i + off;
            d[(i, j)] = v;
            d[(j, i)] = v.conj();
        }
        d[(i, i)].im = 0.0;
    }
    Ok(d)
}

/// Draws `trials` random unit coefficient vectors over `index` and compares
/// `|| sum c (u - e) ||` with `lambda || sum c u || = lambda`.
pub fn pw_inequality_test(profile: &ProfileFunction, g_family: &GFamily, index: &IndexSet, opts: PwOptions) -> Result<PwReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let n_max = index.outer.iter().map(|n| n.abs()).max().unwrap_or(0).max(1);
    let kadec = kadec_check(profile, g_family, n_max, opts.grid, opts.exec)?;
    let lambda = match (kadec.verdict, kadec.lambda) {
        (KadecVerdict::Certified, Some(l)) => l,
        (v, _) => return Err(Error::NotCertified(v.as_str().into())),
    };
    let d = difference_gram(g_family, index, opts.quad_tol, opts.exec)?;
    let dim = index.len();
    let ratio_of = |lhs: f64| {
        if lambda > 0.0 {
            lhs / lambda
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let trials = opts.exec.map(opts.trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(t as u64);
        let mut c = CVector::from_iterator(
            dim,
            (0..dim).map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))),
        );
        let norm = c.norm();
        c /= Complex64::new(norm, 0.0);
        let lhs = linalg::quadratic_form(&d, &c, &c).re.max(0.0).sqrt();
        (lhs, c)
    });
    let ratios: Vec<f64> = trials.iter().map(|(lhs, _)| ratio_of(*lhs)).collect();
    let (argmax_trial, max_ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    if max_ratio > 1.0 + opts.ratio_tol {
        return Err(Error::PwViolation {
            ratio: max_ratio,
            tol: opts.ratio_tol,
            trial: argmax_trial,
            coefficients: trials[argmax_trial].1.iter().map(|z| [z.re, z.im]).collect(),
        });
    }
    let sup_lhs = linalg::extremal_eigenvalues(&d).1.max(0.0).sqrt();
    Ok(PwReport {
        l: kadec.l,
        lambda,
        index: index.clone(),
        trials: opts.trials,
        seed: opts.seed,
        max_lhs: trials[argmax_trial].0,
        max_ratio,
        argmax_trial,
        sup_lhs,
        sup_ratio: ratio_of(sup_lhs),
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear() -> ProfileFunction {
        ProfileFunction::closed_form("1+y/2", 1.0, 1.5).unwrap()
    }

    #[test]
    fn unperturbed_family_is_trivially_certified() {
        let f = linear();
        let r = kadec_check(&f, &GFamily::unperturbed(f.clone()), 8, 101, Execution::Sequential).unwrap();
        assert!(r.per_n.iter().all(|row| row.epsilon == 0.0 && row.pass));
        assert_eq!((r.l, r.lambda, r.verdict), (0.0, Some(0.0), KadecVerdict::Certified));
    }

    #[test]
    fn ingham_family_sits_on_the_boundary() {
        for f in [ProfileFunction::constant(1.0).unwrap(), linear()] {
            let r = kadec_check(&f, &ingham_family(&f), 16, 257, Execution::default()).unwrap();
            assert_eq!(r.verdict, KadecVerdict::Boundary);
            for row in &r.per_n {
                assert!((row.epsilon * 4.0 * row.n.abs() as f64 - 1.0).abs() < 1e-12);
                assert!(!row.pass);
            }
            assert!(r.lambda.is_none());
        }
    }

    #[test]
    fn shrink_family_is_certified_with_closed_form_l() {
        let f = linear();
        let r = kadec_check(&f, &GFamily::shrink(f.clone(), 0.9), 8, 1001, Execution::default()).unwrap();
        assert_eq!(r.verdict, KadecVerdict::Certified);
        for row in &r.per_n {
            let n2 = (row.n * row.n) as f64;
            assert!((row.epsilon - 0.9 / (4.0 * n2)).abs() < 1e-15);
            assert!(PI * row.n.abs() as f64 * row.epsilon <= r.l);
        }
        assert!((r.l - 0.9 * PI / 4.0).abs() < 1e-15);
        let lambda = r.lambda.unwrap();
        assert!((0.0..1.0).contains(&lambda));
    }

    #[test]
    fn violation_is_reported() {
        let f = linear();
        let r = kadec_check(&f, &GFamily::shrink(f.clone(), 4.0), 3, 101, Execution::default()).unwrap();
        assert_eq!(r.verdict, KadecVerdict::Violated);
        assert!(!r.per_n.iter().find(|row| row.n == 1).unwrap().pass);
    }

    #[test]
    fn coarse_grid_is_detected() {
        let f = ProfileFunction::constant(1.0).unwrap();
        // narrow bump between grid points of the coarse grid
        let g = GFamily::custom(f.clone(), |_, y| 1.0 + 0.1 * (-((y - 0.05) * 400.0).powi(2)).exp());
        assert!(matches!(
            kadec_check(&f, &g, 1, 11, Execution::default()),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn pw_bound_values() {
        assert_eq!(pw_bound(0.0).unwrap(), 0.0);
        let l = FRAC_PI_4.next_down();
        assert!((pw_bound(l).unwrap() - 1.0).abs() < 1e-12);
        // direct evaluation of 1 - cos(pi/8) + sin(pi/8), frozen
        assert!((pw_bound(PI / 8.0).unwrap() - 0.45880389985380304).abs() < 1e-12);
        assert!(matches!(pw_bound(FRAC_PI_4), Err(Error::LOutOfRange(_))));
        assert!(pw_bound(-0.1).is_err());
    }

    #[test]
    fn pw_bound_is_monotone_on_a_grid() {
        let grid: Vec<f64> = (0..1000).map(|i| FRAC_PI_4 * i as f64 / 1000.0).collect();
        for w in grid.windows(2) {
            assert!(pw_bound(w[0]).unwrap() < pw_bound(w[1]).unwrap());
        }
    }

    #[test]
    fn unperturbed_differences_vanish() {
        let f = linear();
        let r = pw_inequality_test(
            &f,
            &GFamily::unperturbed(f.clone()),
            &IndexSet::symmetric(3, 2),
            PwOptions {
                trials: 10,
                ..PwOptions::default()
            },
        )
        .unwrap();
        assert!(r.max_lhs < 1e-12);
        assert_eq!(r.max_ratio, 0.0);
    }

    #[test]
    fn single_mode_matches_one_dimensional_oracle() {
        let f = linear();
        let g = GFamily::shrink(f.clone(), 0.9);
        let idx = IndexSet::new(vec![1], vec![0]);
        let d = difference_gram(&g, &idx, 1e-12, Execution::default()).unwrap();
        // |1 - exp(i delta s)|^2 / 2 over [-1,1] x [0,1], delta = pi (f/g_1 - 1)
        let delta = PI * (g.ratio(1, 0.3) - 1.0);
        let m = 20_000;
        let h = 2.0 / m as f64;
        let oracle: f64 = (0..m)
            .map(|i| {
                let s = -1.0 + (i as f64 + 0.5) * h;
                (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, delta * s)).norm_sqr() / 2.0 * h
            })
            .sum();
        assert!((d[(0, 0)].re - oracle).abs() < 1e-8, "{} vs {oracle}", d[(0, 0)].re);
    }

    #[test]
    fn y_dependent_difference_gram_uses_quadrature() {
        let f = linear();
        let g = GFamily::custom(f.clone(), |n, y| {
            let fy = 1.0 + y / 2.0;
            fy / (1.0 + 0.2 * y / (4.0 * (n * n) as f64))
        });
        let idx = IndexSet::symmetric(2, 1);
        let d = difference_gram(&g, &idx, 1e-11, Execution::default()).unwrap();
        assert!(linalg::hermitian_defect(&d) < 1e-14);
        assert!(linalg::extremal_eigenvalues(&d).0 > -1e-12);
    }

    #[test]
    fn monte_carlo_is_reproducible_across_execution_modes() {
        let f = linear();
        let g = GFamily::shrink(f.clone(), 0.9);
        let idx = IndexSet::symmetric(3, 2);
        let mk = |exec| PwOptions {
            trials: 12,
            seed: 42,
            exec,
            ..PwOptions::default()
        };
        let a = pw_inequality_test(&f, &g, &idx, mk(Execution::Sequential)).unwrap();
        let b = pw_inequality_test(&f, &g, &idx, mk(Execution::Parallel)).unwrap();
        assert_eq!(a.ratios, b.ratios);
        assert!(a.max_ratio <= a.sup_ratio + 1e-12 && a.sup_ratio <= 1.0);
    }

    #[test]
    fn uncertified_family_is_rejected() {
        let f = ProfileFunction::constant(1.0).unwrap();
        let err = pw_inequality_test(&f, &ingham_family(&f), &IndexSet::symmetric(2, 1), PwOptions::default());
        assert!(matches!(err, Err(Error::NotCertified(v)) if v == "boundary"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pw_bound_is_strictly_increasing(a in 0.0f64..0.785, b in 0.0f64..0.785) {
            prop_assume!(a < b);
            prop_assert!(pw_bound(a).unwrap() < pw_bound(b).unwrap());
            prop_assert!(pw_bound(b).unwrap() < 1.0);
        }

        #[test]
        fn kadec_is_scale_invariant(c in 0.1f64..10.0, amp in 0.0f64..0.2) {
            let f = linear();
            let cf = f.scaled(c).unwrap();
            let g = GFamily::custom(f.clone(), move |n, y| (1.0 + y / 2.0) * (1.0 + amp * y / (n * n) as f64));
            let cg = GFamily::custom(cf.clone(), move |n, y| c * (1.0 + y / 2.0) * (1.0 + amp * y / (n * n) as f64));
            let a = kadec_check(&f, &g, 4, 201, Execution::Sequential).unwrap();
            let b = kadec_check(&cf, &cg, 4, 201, Execution::Sequential).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
            for (ra, rb) in a.per_n.iter().zip(&b.per_n) {
                prop_assert!((ra.epsilon - rb.epsilon).abs() < 1e-13);
            }
        }

        #[test]
        fn ingham_is_never_certified(slope in -0.5f64..2.0, grid in 3usize..200) {
            let f = ProfileFunction::closed_form(&format!("1+({slope})*y"), 0.5, 3.0).unwrap();
            let r = kadec_check(&f, &ingham_family(&f), 6, grid, Execution::Sequential).unwrap();
            prop_assert_eq!(r.verdict, KadecVerdict::Boundary);
        }
    }
}
