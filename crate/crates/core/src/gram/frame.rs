use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{gram_matrix, reconstruct::Target, Assembly, Domain, GramOptions, GramReport};
use crate::bases::{BasisFamily, IndexSet, PhaseConvention, Weight, XFrequency, YFrequency};
use crate::domains::MultiInterval;
use crate::error::{Error, Result};
use crate::linalg::CVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl BoundingBox {
    pub fn area(&self) -> f64 {
        (self.x.1 - self.x.0) * (self.y.1 - self.y.0)
    }

    /// The box itself as a domain.
    pub fn domain(&self) -> Result<Domain> {
        Ok(Domain::Product {
            x: MultiInterval::interval(self.x.0, self.x.1)?,
            y: self.y,
        })
    }

    /// `exp(2 pi i (n x / width + k y / height))`, orthogonal on the box
    /// with squared norm equal to its area.
    pub fn harmonic_family(&self, nx: i64, ny: i64) -> BasisFamily {
        BasisFamily {
            label: "box harmonics".into(),
            convention: PhaseConvention::TwoPi,
            index: IndexSet::symmetric(nx, ny),
            x_freq: XFrequency::Linear(1.0 / (self.x.1 - self.x.0)),
            y_freq: YFrequency::Linear(1.0 / (self.y.1 - self.y.0)),
            weight: Weight::Unit,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FrameOptions {
    pub nx: i64,
    pub ny: i64,
    pub probes: usize,
    pub seed: u64,
    pub gram: GramOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RestrictedFrameReport {
    pub bounding_box: BoundingBox,
    pub gram: GramReport,
    /// Area of the box: the frame constant of the full harmonic system.
    pub tight_constant: f64,
    pub seed: u64,
    pub probes: usize,
    /// `sum |<f, e_j>|^2 / ||f||^2` for each random probe.
    pub probe_ratios: Vec<f64>,
    pub probe_min: f64,
    pub probe_max: f64,
    /// The same ratio for the indicator of the domain.
    pub indicator_ratio: f64,
    pub warning: String,
}

fn check_inside(bbox: &BoundingBox, domain: &Domain) -> Result<()> {
    let (y0, y1) = domain.y_range();
    let eps = 1e-12;
    if y0 < bbox.y.0 - eps || y1 > bbox.y.1 + eps {
        return Err(Error::Mismatch("domain leaves the bounding box in y".into()));
    }
    if domain.is_radial() {
        return Err(Error::Mismatch("restricted frames are planar".into()));
    }
    for i in 0..=1000 {
        let y = y0 + (y1 - y0) * i as f64 / 1000.0;
        for (l, r) in domain.cross_section(y) {
            if l < bbox.x.0 - eps || r > bbox.x.1 + eps {
                return Err(Error::Mismatch(format!("domain leaves the bounding box in x at y = {y}")));
            }
        }
    }
    Ok(())
}

/// Restricts the harmonic system of `bbox` to `domain` and probes the frame
/// inequality with random trigonometric polynomials supported in the domain.
///
/// A probe `f = chi_D sum a_j e_j` has `<f, e_i> = (G a)_i` and
/// `||f||^2 = a* G a`, so its ratio is `||G a||^2 / a* G a`.
pub fn restricted_frame_check(bbox: BoundingBox, domain: &Domain, opts: FrameOptions) -> Result<RestrictedFrameReport> {
    check_inside(&bbox, domain)?;
    let family = bbox.harmonic_family(opts.nx, opts.ny);
    let gram = gram_matrix(&family, domain, opts.gram)?;
    let g = &gram.matrix;
    let dim = family.len();

    let probe_ratios = opts.gram.exec.map(opts.probes, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(p as u64);
        let a = CVector::from_iterator(
            dim,
            (0..dim).map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))),
        );
        let ga = g * &a;
        ga.norm_squared() / a.dotc(&ga).re
    });

    let asm = Assembly::new(&family, domain, opts.gram)?;
    let (b, norm2) = super::reconstruct::moments_for(&asm, &Target::Constant(1.0))?;
    let indicator_ratio = b.iter().map(|z| z.norm_sqr()).sum::<f64>() / norm2;

    let probe_min = probe_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let probe_max = probe_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RestrictedFrameReport {
        bounding_box: bbox,
        tight_constant: bbox.area(),
        seed: opts.seed,
        probes: opts.probes,
        probe_ratios,
        probe_min,
        probe_max,
        indicator_ratio,
        warning: "probes only see the truncated span, so the observed minimum over-estimates the lower frame bound"
            .into(),
        gram,
    })
}
