//! Exponential bases on regular multi-rectangles.
//!
//! A step profile `b_1, ..., b_N` gives the multi-rectangle
//! `R = U_j (-b_j, b_j) x ((j-1)/N, j/N)`. Dilating `y` by `N` and
//! translating row `j` by `(2(j-1), -(j-1))` maps `R` onto `I x (0, 1)` with
//! `I = U_j I_j` a multi-interval inside `(-1, 2N - 1)`. An exponential
//! basis `{exp(2 pi i n_k x / (2N))}` of `L^2(I)` is paired with the
//! remainder-shifted y-frequencies, assembled into a tensor basis on
//! `I x (0, 1)` and carried back to `R`.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bases::{
    remainder_shift, BasisFamily, FamilySummary, IndexSet, PhaseConvention, Weight, XFrequency, YFrequency,
};
use crate::domains::{build_multiinterval, MultiInterval, StepProfile};
use crate::error::{Error, Result};
use crate::gram::{gram_matrix, segment_integral, Domain, GramOptions, GramReport};
use crate::linalg::{self, principal_submatrix, CMatrix};
use crate::par::Execution;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Candidates are `n / (2L)` with `|n| <= window`.
    pub window: i64,
    pub max_cond: f64,
    /// `L`; defaults to half the length of the hull of `I`.
    pub half_width: Option<f64>,
    /// Number of restarts; seed 0 is the deterministic greedy start.
    pub seeds: usize,
    pub rng_seed: u64,
    pub max_sweeps: usize,
    pub exec: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            window: 24,
            max_cond: 50.0,
            half_width: None,
            seeds: 8,
            rng_seed: 0,
            max_sweeps: 200,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisSelection {
    pub multiinterval: MultiInterval,
    pub half_width: f64,
    pub window: i64,
    /// Strictly increasing.
    pub indices: Vec<i64>,
    /// `n_k / (2L)`.
    pub frequencies: Vec<f64>,
    pub condition_number: f64,
    /// Restart that produced the selection.
    pub seed_index: usize,
    /// `|selection| / (2 window + 1)`.
    pub density: f64,
    /// `|I| / (2L)`, the density exponential Riesz bases of `L^2(I)` have.
    pub expected_density: f64,
    pub certificate: GramReport,
}

/// Gram matrix of `(2L)^{-1/2} exp(2 pi i n x / (2L))`, `|n| <= window`,
/// on `L^2(I)`; the identity when `I` fills `(-L, L)` up to translation.
pub fn candidate_gram(interval: &MultiInterval, half_width: f64, window: i64) -> CMatrix {
    let ns: Vec<i64> = (-window..=window).collect();
    let m = ns.len();
    let scale = 1.0 / (2.0 * half_width);
    CMatrix::from_fn(m, m, |i, j| {
        let theta = 2.0 * std::f64::consts::PI * (ns[j] - ns[i]) as f64 / (2.0 * half_width);
        interval
            .segments()
            .iter()
            .map(|(l, r)| segment_integral(*l, *r, theta))
            .sum::<Complex64>()
            * scale
    })
}

/// Condition number of the principal submatrix on `sel`.
pub fn selection_condition(full: &CMatrix, sel: &[usize]) -> f64 {
    if sel.len() <= 1 {
        return 1.0;
    }
    let (lo, hi) = linalg::extremal_eigenvalues(&principal_submatrix(full, sel));
    linalg::condition_number(lo, hi)
}

fn greedy(full: &CMatrix, order: &[usize], size: usize) -> Vec<usize> {
    let mut sel: Vec<usize> = Vec::with_capacity(size);
    while sel.len() < size {
        let mut best: Option<(f64, usize)> = None;
        for &c in order {
            if sel.contains(&c) {
                continue;
            }
            let mut trial = sel.clone();
            trial.push(c);
            let cond = selection_condition(full, &trial);
            if best.is_none_or(|(b, _)| cond < b) {
                best = Some((cond, c));
            }
        }
        match best {
            Some((_, c)) => sel.push(c),
            None => break,
        }
    }
    sel.sort_unstable();
    sel
}

/// Steepest-descent swap refinement: replaces one selected candidate by an
/// unselected one while that strictly lowers the condition number.
fn refine(full: &CMatrix, mut sel: Vec<usize>, order: &[usize], max_sweeps: usize) -> (Vec<usize>, f64) {
    let mut cond = selection_condition(full, &sel);
    for _ in 0..max_sweeps {
        let mut best: Option<(f64, usize, usize)> = None;
        for pos in 0..sel.len() {
            for &c in order {
                if sel.contains(&c) {
                    continue;
                }
                let mut trial = sel.clone();
                trial[pos] = c;
                let v = selection_condition(full, &trial);
                if v < cond * (1.0 - 1e-12) && best.is_none_or(|(b, _, _)| v < b) {
                    best = Some((v, pos, c));
                }
            }
        }
        match best {
            Some((v, pos, c)) => {
                sel[pos] = c;
                cond = v;
            }
            None => break,
        }
    }
    sel.sort_unstable();
    (sel, cond)
}

/// Looks for `K = round(|I| / (2L) (2 window + 1))` lattice frequencies
/// `n / (2L)` whose Gram matrix on `L^2(I)` is well conditioned.
///
/// Restart 0 builds its selection greedily (ties to the smallest `|n|`);
/// the others start from random subsets. Every restart then runs swap
/// refinement, and the best result by (condition number, restart index)
/// wins. If it still exceeds `max_cond`, the error carries it.
pub fn search_interval_basis(interval: &MultiInterval, opts: SearchOptions) -> Result<BasisSelection> {
    if opts.window < 0 {
        return Err(Error::InvalidArgument("window must be non-negative".into()));
    }
    let (a, b) = interval.hull();
    let half_width = opts.half_width.unwrap_or(0.5 * (b - a));
    if !(half_width > 0.0) || b - a > 2.0 * half_width + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "half width {half_width} does not cover the hull ({a}, {b})"
        )));
    }
    let m = (2 * opts.window + 1) as usize;
    let expected_density = interval.total_length() / (2.0 * half_width);
    let size = ((expected_density * m as f64).round() as usize).clamp(1, m);
    let full = candidate_gram(interval, half_width, opts.window);
    let ns: Vec<i64> = (-opts.window..=opts.window).collect();
    // candidate positions ordered by (|n|, n)
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|i| (ns[*i].abs(), ns[*i]));

    let seeds = opts.seeds.max(1);
    let results = opts.exec.map(seeds, |s| {
        let start = if s == 0 {
            greedy(&full, &order, size)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
            rng.set_stream(s as u64);
            let mut v = sample(&mut rng, m, size).into_vec();
            v.sort_unstable();
            v
        };
        refine(&full, start, &order, opts.max_sweeps)
    });
    let (seed_index, (sel, cond)) = results
        .into_iter()
        .enumerate()
        .min_by(|(i, (_, c1)), (j, (_, c2))| c1.total_cmp(c2).then(i.cmp(j)))
        .expect("at least one seed");

    let indices: Vec<i64> = sel.iter().map(|i| ns[*i]).collect();
    let family = interval_family(&indices, half_width);
    let certificate = GramReport::from_matrix(
        "interval exponentials".into(),
        family.index.clone(),
        principal_submatrix(&full, &sel),
        0.0,
        true,
    );
    let selection = BasisSelection {
        multiinterval: interval.clone(),
        half_width,
        window: opts.window,
        frequencies: indices.iter().map(|n| *n as f64 / (2.0 * half_width)).collect(),
        indices,
        condition_number: cond,
        seed_index,
        density: size as f64 / m as f64,
        expected_density,
        certificate,
    };
    if !(cond <= opts.max_cond) {
        return Err(Error::SearchFailed {
            best: cond,
            max_cond: opts.max_cond,
            selection: Box::new(selection),
        });
    }
    Ok(selection)
}

/// `{(2L)^{-1/2} exp(2 pi i n_k x / (2L))}` as a one-row family.
fn interval_family(indices: &[i64], half_width: f64) -> BasisFamily {
    BasisFamily {
        label: "interval exponentials".into(),
        convention: PhaseConvention::TwoPi,
        index: IndexSet::new(indices.to_vec(), vec![0]),
        x_freq: XFrequency::Linear(1.0 / (2.0 * half_width)),
        y_freq: YFrequency::Linear(0.0),
        weight: Weight::Constant((2.0 * half_width).powf(-0.5)),
    }
}

/// The assembled basis on a multi-rectangle together with its tensor
/// counterpart on `I x (0, 1)`.
#[derive(Clone, Debug)]
pub struct MultirectBasis {
    pub step: StepProfile,
    pub selection: BasisSelection,
    pub y_window: i64,
    /// `sqrt(N / 2N) exp(2 pi i (n_k x / (2N) + ((n_k mod N) + h N) y))` on
    /// the original multi-rectangle.
    pub family: BasisFamily,
    /// `(2N)^{-1/2} exp(2 pi i (n_k x / (2N) + ((n_k mod N)/N + h) y))` on
    /// `I x (0, 1)`.
    pub tensor_family: BasisFamily,
    pub domain: Domain,
    pub tensor_domain: Domain,
    pub lifted: GramReport,
    pub tensor: GramReport,
    /// `max |G_lifted - G_tensor|`.
    pub isometry_defect: f64,
    /// The translation phase is an integer multiple of `2 pi` for every
    /// element and row (checked in integer arithmetic).
    pub phase_identity_holds: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultirectReport {
    pub steps: Vec<f64>,
    pub y_window: i64,
    pub selection: BasisSelection,
    pub family: FamilySummary,
    pub lifted: GramReport,
    pub tensor: GramReport,
    pub isometry_defect: f64,
    pub condition_gap: f64,
    pub phase_identity_holds: bool,
}

impl MultirectBasis {
    pub fn report(&self) -> MultirectReport {
        MultirectReport {
            steps: self.step.values().to_vec(),
            y_window: self.y_window,
            selection: self.selection.clone(),
            family: self.family.summary(0),
            lifted: self.lifted.clone(),
            tensor: self.tensor.clone(),
            isometry_defect: self.isometry_defect,
            condition_gap: (self.lifted.condition_number - self.tensor.condition_number).abs(),
            phase_identity_holds: self.phase_identity_holds,
        }
    }
}

/// Assembles the tensor basis on `I x (0, 1)` from a certified selection
/// and carries it to the multi-rectangle of `step`.
pub fn build_multirect_basis(
    step: &StepProfile,
    selection: &BasisSelection,
    y_window: i64,
    opts: GramOptions,
) -> Result<MultirectBasis> {
    let interval = build_multiinterval(step)?;
    let n = step.steps() as i64;
    if selection.multiinterval != interval {
        return Err(Error::Mismatch("selection was built for a different multi-interval".into()));
    }
    if (selection.half_width - n as f64).abs() > 1e-12 {
        return Err(Error::Mismatch(format!(
            "selection uses L = {}, the multi-rectangle needs L = N = {n}",
            selection.half_width
        )));
    }
    if y_window < 0 {
        return Err(Error::InvalidArgument("y window must be non-negative".into()));
    }
    let index = IndexSet::new(selection.indices.clone(), (-y_window..=y_window).collect());
    let x_freq = XFrequency::Linear(1.0 / (2.0 * n as f64));
    let tensor_family = BasisFamily {
        label: "tensor family on I x (0, 1)".into(),
        convention: PhaseConvention::TwoPi,
        index: index.clone(),
        x_freq: x_freq.clone(),
        y_freq: YFrequency::RemainderShift { steps: n, dilated: true },
        weight: Weight::Constant((2.0 * n as f64).powf(-0.5)),
    };
    let family = BasisFamily {
        label: format!("multi-rectangle family N = {n}"),
        convention: PhaseConvention::TwoPi,
        index: index.clone(),
        x_freq,
        y_freq: YFrequency::RemainderShift { steps: n, dilated: false },
        // sqrt(N) from the dilation Jacobian
        weight: Weight::Constant((n as f64).sqrt() * (2.0 * n as f64).powf(-0.5)),
    };
    let tensor_domain = Domain::Product {
        x: interval,
        y: (0.0, 1.0),
    };
    let domain = Domain::MultiRect(step.clone());
    let tensor = gram_matrix(&tensor_family, &tensor_domain, opts)?;
    let lifted = gram_matrix(&family, &domain, opts)?;
    let isometry_defect = (&lifted.matrix - &tensor.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let phase_identity_holds = index.labels().iter().all(|(nk, h)| {
        let s = remainder_shift(*nk, n, *h);
        (1..=n).all(|j| s.phase_consistent(j))
    });
    Ok(MultirectBasis {
        step: step.clone(),
        selection: selection.clone(),
        y_window,
        family,
        tensor_family,
        domain,
        tensor_domain,
        lifted,
        tensor,
        isometry_defect,
        phase_identity_holds,
    })
}

/// Search on the multi-interval of `step` with `L = N`, then assemble.
pub fn multirect_pipeline(
    step: &StepProfile,
    search: SearchOptions,
    y_window: i64,
    opts: GramOptions,
) -> Result<MultirectBasis> {
    let interval = build_multiinterval(step)?;
    let selection = search_interval_basis(
        &interval,
        SearchOptions {
            half_width: Some(step.steps() as f64),
            ..search
        },
    )?;
    build_multirect_basis(step, &selection, y_window, opts)
}
