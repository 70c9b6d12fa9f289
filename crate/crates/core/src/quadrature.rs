//! Adaptive Gauss–Kronrod (7/15) quadrature for complex integrands on an
//! interval, plus Gauss–Legendre rules for the few places where a fixed
//! rule is enough.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    /// Absolute tolerance on the whole integral.
    pub abs_tol: f64,
    /// Hard cap on the number of panels.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-9,
            max_panels: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
}

/// The integral did not reach the tolerance before the panel cap.
#[derive(Clone, Copy, Debug)]
pub struct QuadFailure {
    pub value: Complex64,
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Integrates `f` over `[breaks[0], breaks[last]]`.
///
/// Every interval between consecutive `breaks` is split into `seed_panels`
/// equal panels before adaptation starts; integrands with known jumps should
/// list them as breakpoints. Panels are bisected in order of decreasing
/// error estimate until the summed estimate drops below `abs_tol`.
pub fn integrate<F>(
    f: F,
    breaks: &[f64],
    seed_panels: usize,
    opts: QuadOptions,
) -> Result<QuadResult, QuadFailure>
where
    F: Fn(f64) -> Complex64,
{
    let seed_panels = seed_panels.max(1);
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) {
            continue;
        }
        let step = (hi - lo) / seed_panels as f64;
        for p in 0..seed_panels {
            let a = lo + step * p as f64;
            let b = if p + 1 == seed_panels {
                hi
            } else {
                lo + step * (p + 1) as f64
            };
            let (value, error) = gk15(&f, a, b);
            heap.push(Panel { a, b, value, error });
        }
    }

    let total_error = |heap: &BinaryHeap<Panel>| heap.iter().map(|p| p.error).sum::<f64>();
    let mut err = total_error(&heap);
    while err > opts.abs_tol && heap.len() < opts.max_panels {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Cannot bisect further in floating point.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // Sum in left-to-right order for reproducibility.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(Complex64::new(0.0, 0.0), |s, p| s + p.value);
    let error: f64 = panels.iter().map(|p| p.error).sum();
    if error > opts.abs_tol {
        return Err(QuadFailure { value, error });
    }
    Ok(QuadResult {
        value,
        error,
        panels: panels.len(),
    })
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(
    f: F,
    breaks: &[f64],
    seed_panels: usize,
    opts: QuadOptions,
) -> Result<f64, QuadFailure>
where
    F: Fn(f64) -> f64,
{
    integrate(|y| Complex64::new(f(y), 0.0), breaks, seed_panels, opts).map(|r| r.value.re)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-rule integral of `f` over `[a, b]` with `n` Gauss–Legendre nodes.
pub fn gauss_legendre_integral<F>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.0
        .iter()
        .zip(&rule.1)
        .fold(Complex64::new(0.0, 0.0), |s, (x, w)| s + f(c + h * x) * *w)
        * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn oscillatory_exponential() {
        // int_0^1 e^{2 pi i 7 y} dy = 0
        let r = integrate(
            |y| Complex64::from_polar(1.0, 2.0 * PI * 7.0 * y),
            &[0.0, 1.0],
            8,
            QuadOptions::default(),
        )
        .unwrap();
        assert!(r.value.norm() < 1e-12);
        // int_0^1 y e^{i y} dy = (1 - i) e^{i} ... checked by parts: e^{i}(1/i + 1) - 1
        let i = Complex64::i();
        let exact = i.exp() * (-i + 1.0) - 1.0;
        let r = integrate(|y| i.scale(y).exp() * y, &[0.0, 1.0], 1, QuadOptions::default())
            .unwrap();
        assert!((r.value - exact).norm() < 1e-13);
    }

    #[test]
    fn breakpoints_handle_jumps() {
        let f = |y: f64| if y < 1.0 / 3.0 { 1.0 } else { 2.0 };
        let v = integrate_real(f, &[0.0, 1.0 / 3.0, 1.0], 1, QuadOptions::default()).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn failure_reports_estimate() {
        let opts = QuadOptions {
            abs_tol: 1e-14,
            max_panels: 4,
        };
        let err = integrate_real(|y: f64| y.sqrt(), &[0.0, 1.0], 1, opts).unwrap_err();
        assert!(err.error > 1e-14);
        assert!((err.value.re - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = gauss_legendre(10);
        assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 19 monomial integrates exactly; use x^18 on [0, 1]
        let v = gauss_legendre_integral(|x| Complex64::new(x.powi(18), 0.0), 0.0, 1.0, &rule);
        assert!((v.re - 1.0 / 19.0).abs() < 1e-14);
    }
}
