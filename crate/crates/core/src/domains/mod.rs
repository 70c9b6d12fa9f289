//! Trapezoids, multi-rectangles, multi-intervals and spherical trapezoids.

mod approx;
mod profile;

pub use approx::{approximate_profile, base_partition, left_endpoint_step, ApproxOptions, StepApproximation};
pub use profile::{
    unit_grid, validate_profile, validate_profile_with, Continuity, ProfileFunction, StepProfile,
    ValidationReport, Violation,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_real, QuadOptions};

/// The region `{ |x| <= f(y), 0 <= y <= 1 }`.
#[derive(Clone, Debug)]
pub struct Trapezoid {
    pub profile: ProfileFunction,
}

impl Trapezoid {
    pub fn new(profile: ProfileFunction) -> Trapezoid {
        Trapezoid { profile }
    }

    /// `int_0^1 2 f(y) dy`.
    pub fn area(&self) -> Result<f64> {
        if let Some(step) = self.profile.as_step() {
            return Ok(2.0 * step.values().iter().sum::<f64>() / step.steps() as f64);
        }
        let opts = QuadOptions {
            abs_tol: 1e-12,
            ..QuadOptions::default()
        };
        integrate_real(|y| 2.0 * self.profile.eval(y), &self.profile.breakpoints(), 4, opts).map_err(
            |e| Error::Quadrature {
                row: 0,
                col: 0,
                estimate: e.error,
                tol: opts.abs_tol,
            },
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=1.0).contains(&y) && x.abs() <= self.profile.eval(y)
    }
}

/// A finite union of disjoint open intervals, in increasing order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiInterval {
    segments: Vec<(f64, f64)>,
}

impl MultiInterval {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<MultiInterval> {
        if segments.is_empty() {
            return Err(Error::InvalidMultiInterval("no segments".into()));
        }
        for (l, r) in &segments {
            if !(l.is_finite() && r.is_finite() && l < r) {
                return Err(Error::InvalidMultiInterval(format!("segment ({l}, {r}) is empty")));
            }
        }
        for w in segments.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::InvalidMultiInterval(format!(
                    "segments ({}, {}) and ({}, {}) overlap or are out of order",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(MultiInterval { segments })
    }

    pub fn interval(l: f64, r: f64) -> Result<MultiInterval> {
        MultiInterval::new(vec![(l, r)])
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|(l, r)| r - l).sum()
    }

    /// Smallest interval containing every segment.
    pub fn hull(&self) -> (f64, f64) {
        (self.segments[0].0, self.segments[self.segments.len() - 1].1)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.segments.iter().any(|(l, r)| *l < x && x < *r)
    }

    pub fn is_single_interval(&self) -> bool {
        self.segments.windows(2).all(|w| w[0].1 == w[1].0)
    }
}

/// `I = U_j (-b_j + 2(j-1), b_j + 2(j-1))`.
pub fn build_multiinterval(step: &StepProfile) -> Result<MultiInterval> {
    if let Some((j, b)) = step.values().iter().enumerate().find(|(_, b)| **b > 1.0) {
        return Err(Error::StepValueOutOfRange { index: j + 1, value: *b });
    }
    let segments = step
        .values()
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let shift = 2.0 * j as f64;
            (shift - b, shift + b)
        })
        .collect();
    MultiInterval::new(segments)
}

/// Translation vectors `v_j = (2(j-1), -(j-1))` carrying the row
/// `R_j = (-b_j, b_j) x (j-1, j)` (unit-height rows) onto `I_j x (0, 1)`.
pub fn translation_plan(step: &StepProfile) -> Vec<(i64, i64)> {
    (0..step.steps() as i64).map(|j| (2 * j, -j)).collect()
}

/// `Gamma(k/2)` for a positive integer `k`.
fn gamma_half(k: u32) -> f64 {
    let mut g = if k.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut m = if k.is_multiple_of(2) { 2 } else { 1 };
    while m + 2 <= k {
        g *= m as f64 / 2.0;
        m += 2;
    }
    g
}

/// Surface measure of the unit sphere `S^{d-2}` in `R^{d-1}`, with the
/// convention `|S^0| = 1`.
pub fn sphere_measure(d: usize) -> Result<f64> {
    match d {
        0 | 1 => Err(Error::Dimension(d)),
        2 => Ok(1.0),
        _ => {
            let k = (d - 1) as u32;
            Ok(2.0 * std::f64::consts::PI.powf(k as f64 / 2.0) / gamma_half(k))
        }
    }
}

/// `{ (x', y) in R^d : |x'| <= f(y), 0 <= y <= 1 }`.
#[derive(Clone, Debug)]
pub struct SphericalTrapezoid {
    pub profile: ProfileFunction,
    dim: usize,
    sphere: f64,
}

impl SphericalTrapezoid {
    pub fn new(profile: ProfileFunction, dim: usize) -> Result<SphericalTrapezoid> {
        let sphere = sphere_measure(dim)?;
        Ok(SphericalTrapezoid { profile, dim, sphere })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `|S^{d-2}|`.
    pub fn sphere_measure(&self) -> f64 {
        self.sphere
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn multiinterval_examples() {
        let one = build_multiinterval(&StepProfile::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(one.segments(), &[(-1.0, 1.0)]);
        let two = build_multiinterval(&StepProfile::new(vec![1.0, 0.5]).unwrap()).unwrap();
        assert_eq!(two.segments(), &[(-1.0, 1.0), (1.5, 2.5)]);
        let three = build_multiinterval(&StepProfile::new(vec![1.0; 3]).unwrap()).unwrap();
        assert_eq!(three.segments(), &[(-1.0, 1.0), (1.0, 3.0), (3.0, 5.0)]);
        assert!(three.is_single_interval());
        assert!(!three.contains(1.0));
        assert!(matches!(
            build_multiinterval(&StepProfile::new(vec![1.0, 1.2]).unwrap()),
            Err(Error::StepValueOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn translation_examples() {
        assert_eq!(translation_plan(&StepProfile::new(vec![1.0]).unwrap()), vec![(0, 0)]);
        let s = StepProfile::new(vec![1.0, 0.3, 0.7]).unwrap();
        let plan = translation_plan(&s);
        assert_eq!(plan, vec![(0, 0), (2, -1), (4, -2)]);
        let i = build_multiinterval(&s).unwrap();
        for (j, ((vx, vy), b)) in plan.iter().zip(s.values()).enumerate() {
            // R_j = (-b_j, b_j) x (j, j+1) translated by v_j
            let (l, r) = (-b + *vx as f64, b + *vx as f64);
            assert_eq!((l, r), i.segments()[j]);
            assert_eq!(j as i64 + vy, 0);
        }
    }

    #[test]
    fn sphere_measures() {
        assert_eq!(sphere_measure(2).unwrap(), 1.0);
        assert!((sphere_measure(3).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(4).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_measure(5).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        assert!(matches!(sphere_measure(1), Err(Error::Dimension(1))));
        assert!(SphericalTrapezoid::new(ProfileFunction::constant(1.0).unwrap(), 1).is_err());
    }

    #[test]
    fn trapezoid_area() {
        let t = Trapezoid::new(ProfileFunction::closed_form("1+y/2", 1.0, 1.5).unwrap());
        assert!((t.area().unwrap() - 2.5).abs() < 1e-13);
        let m = Trapezoid::new(ProfileFunction::from_step(StepProfile::new(vec![1.0, 0.5]).unwrap()));
        assert_eq!(m.area().unwrap(), 1.5);
    }

    proptest! {
        #[test]
        fn multiinterval_is_disjoint_and_measure_preserving(
            b in prop::collection::vec(0.001f64..=1.0, 1..12)
        ) {
            let step = StepProfile::new(b.clone()).unwrap();
            let i = build_multiinterval(&step).unwrap();
            for w in i.segments().windows(2) {
                prop_assert!(w[0].1 <= w[1].0);
            }
            let total: f64 = 2.0 * b.iter().sum::<f64>();
            prop_assert!((i.total_length() - total).abs() < 1e-12);
            let (lo, hi) = i.hull();
            prop_assert!(lo >= -1.0 && hi <= 2.0 * b.len() as f64 - 1.0);
        }
    }
}
