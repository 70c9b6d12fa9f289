use std::path::PathBuf;

use serde::Serialize;

use expbasis::bases::{spherical_basis, trapezoid_basis};
use expbasis::config::Config;
use expbasis::domains::{approximate_profile, validate_profile_with, ApproxOptions};
use expbasis::gram::{
    gram_matrix, reconstruct, restricted_frame_check, write_binary, write_csv, BinaryPrecision, BoundingBox,
    FrameOptions,
};
use expbasis::multirect::multirect_pipeline;
use expbasis::stability::{kadec_check, pw_inequality_test, PwOptions};
use expbasis::{
    Domain, Execution, GFamily, GramOptions, GramReport, GramVerdict, IndexSet, KadecVerdict, ProfileFunction,
    SearchOptions, SphericalTrapezoid, StepProfile, Trapezoid,
};

use crate::artifacts::{Artifacts, Plot, Table};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Negative,
}

pub type Outcome = Result<(Status, Artifacts), CliError>;

pub struct Ctx {
    pub config: Option<Config>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub exec: Execution,
}

impl Ctx {
    fn config(&self) -> Result<&Config, CliError> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs --config".into()))
    }

    fn gram_options(&self) -> GramOptions {
        GramOptions {
            tol: self.tol.unwrap_or(GramOptions::default().tol),
            exec: self.exec,
            ..GramOptions::default()
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// The trapezoid, or the multi-rectangle when the profile is a step.
fn planar_domain(profile: &ProfileFunction) -> Domain {
    match profile.as_step() {
        Some(step) => Domain::MultiRect(step.clone()),
        None => Domain::Trapezoid(Trapezoid::new(profile.clone())),
    }
}

fn g_family(cfg: &Config, profile: &ProfileFunction, n_max: i64) -> Result<Option<GFamily>, CliError> {
    Ok(cfg.g_family(profile, n_max)?)
}

pub fn validate(ctx: &Ctx, grid: Option<usize>) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let grid = grid.or(cfg.grid).unwrap_or(1001);
    let report = validate_profile_with(&profile, grid, ctx.exec)?;
    let status = if report.is_clean() { Status::Pass } else { Status::Negative };

    #[derive(Serialize)]
    struct Report<'a> {
        profile: String,
        validation: &'a expbasis::domains::ValidationReport,
    }
    let mut art = Artifacts::new(&Report {
        profile: profile.describe(),
        validation: &report,
    })?;
    let mut t = Table::new("violations", &["y", "value"]);
    for v in &report.violations {
        t.push([num(v.y), num(v.value)]);
    }
    art.tables.push(t);
    let denom = (grid - 1) as f64;
    art.plots.push(Plot {
        name: "profile",
        columns: ("y", "f"),
        points: (0..grid).map(|i| i as f64 / denom).map(|y| (y, profile.eval(y))).collect(),
    });
    Ok((status, art))
}

pub fn approximate(ctx: &Ctx, ns: Vec<u32>, audit_grid: Option<usize>) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let ns = if ns.is_empty() {
        cfg.n.clone().unwrap_or_else(|| vec![1, 2, 4, 8, 16])
    } else {
        ns
    };
    let opts = ApproxOptions {
        audit_grid: audit_grid.or(cfg.audit_grid).unwrap_or(10_000),
        exec: ctx.exec,
        ..ApproxOptions::default()
    };
    let approximations = ns
        .iter()
        .map(|n| approximate_profile(&profile, *n, opts))
        .collect::<expbasis::Result<Vec<_>>>()?;
    let status = if approximations.iter().all(|a| a.is_certified()) {
        Status::Pass
    } else {
        Status::Negative
    };

    #[derive(Serialize)]
    struct Report<'a> {
        profile: String,
        approximations: &'a [expbasis::StepApproximation],
    }
    let mut art = Artifacts::new(&Report {
        profile: profile.describe(),
        approximations: &approximations,
    })?;
    let mut t = Table::new(
        "approximations",
        &["n", "steps", "bound", "sup_inverse", "sup_uniform", "certified"],
    );
    for a in &approximations {
        t.push([
            a.n.to_string(),
            a.steps.to_string(),
            num(a.bound),
            num(a.sup_inverse),
            num(a.sup_uniform),
            a.is_certified().to_string(),
        ]);
    }
    art.tables.push(t);
    art.plots.push(Plot {
        name: "steps",
        columns: ("n", "steps"),
        points: approximations.iter().map(|a| (a.n as f64, a.steps as f64)).collect(),
    });
    Ok((status, art))
}

pub struct StabilityArgs {
    pub n_max: Option<i64>,
    pub grid: Option<usize>,
    pub trials: Option<usize>,
}

pub fn stability(ctx: &Ctx, args: StabilityArgs) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let n_max = args.n_max.or(cfg.n_max).unwrap_or(8);
    let grid = args.grid.or(cfg.grid).unwrap_or(1001);
    let g = g_family(cfg, &profile, n_max)?.unwrap_or_else(|| GFamily::unperturbed(profile.clone()));
    let kadec = kadec_check(&profile, &g, n_max, grid, ctx.exec)?;

    let mut t = Table::new("kadec", &["n", "epsilon", "threshold", "epsilon_times_4n"]);
    for row in &kadec.per_n {
        t.push([
            row.n.to_string(),
            num(row.epsilon),
            num(row.threshold),
            num(row.epsilon * 4.0 * row.n.unsigned_abs() as f64),
        ]);
    }
    let plot = Plot {
        name: "epsilon",
        columns: ("n", "epsilon"),
        points: kadec.per_n.iter().map(|r| (r.n as f64, r.epsilon)).collect(),
    };

    let trials = args.trials.or(cfg.trials);
    let pw = match trials {
        Some(trials) if kadec.verdict == KadecVerdict::Certified => {
            let index = match cfg.truncation {
                Some((nx, ny)) => IndexSet::symmetric(nx, ny),
                None => IndexSet::symmetric(n_max, n_max),
            };
            let opts = PwOptions {
                trials,
                seed: ctx.seed,
                grid,
                exec: ctx.exec,
                ..PwOptions::default()
            };
            Some(pw_inequality_test(&profile, &g, &index, opts)?)
        }
        _ => None,
    };
    let status = if kadec.verdict == KadecVerdict::Certified {
        Status::Pass
    } else {
        Status::Negative
    };

    #[derive(Serialize)]
    struct Report<'a> {
        profile: String,
        perturbation: String,
        kadec: &'a expbasis::KadecReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        paley_wiener: Option<&'a expbasis::PwReport>,
    }
    let mut art = Artifacts::new(&Report {
        profile: profile.describe(),
        perturbation: g.describe(),
        kadec: &kadec,
        paley_wiener: pw.as_ref(),
    })?;
    art.tables.push(t);
    art.plots.push(plot);
    if let Some(pw) = &pw {
        let mut t = Table::new("pw", &["trial", "ratio"]);
        for (i, r) in pw.ratios.iter().enumerate() {
            t.push([i.to_string(), num(*r)]);
        }
        art.tables.push(t);
    }
    Ok((status, art))
}

fn sweep_table(reports: &[GramReport]) -> (Table, Plot) {
    let mut t = Table::new(
        "sweep",
        &["n_x", "n_y", "dimension", "eigen_min", "eigen_max", "cond", "verdict"],
    );
    for r in reports {
        t.push([
            r.truncation.0.to_string(),
            r.truncation.1.to_string(),
            r.dimension.to_string(),
            num(r.eigen_min),
            num(r.eigen_max),
            num(r.condition_number),
            serde_json::to_value(r.verdict)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        ]);
    }
    let plot = Plot {
        name: "eigen_min",
        columns: ("n_x", "eigen_min"),
        points: reports.iter().map(|r| (r.truncation.0 as f64, r.eigen_min)).collect(),
    };
    (t, plot)
}

fn gram_status(reports: &[GramReport]) -> Status {
    if reports.iter().any(|r| r.verdict == GramVerdict::IllConditioned) {
        Status::Negative
    } else {
        Status::Pass
    }
}

fn export_matrix(report: &GramReport, path: &PathBuf, f64_pairs: bool) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        write_csv(&report.matrix, file)?;
    } else {
        let precision = if f64_pairs { BinaryPrecision::F64 } else { BinaryPrecision::F32 };
        write_binary(&report.matrix, precision, file)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepReport<'a> {
    profile: String,
    family: String,
    reports: &'a [GramReport],
}

pub fn gram(ctx: &Ctx, export: Option<PathBuf>, f64_pairs: bool) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let weighted = cfg.weighted.unwrap_or(true);
    let domain = planar_domain(&profile);
    let mut reports = Vec::new();
    let mut family_label = String::new();
    for (nx, ny) in cfg.truncation_sweep()? {
        let g = g_family(cfg, &profile, nx)?;
        let family = trapezoid_basis(&profile, g, IndexSet::symmetric(nx, ny), weighted)?;
        family_label = family.label.clone();
        reports.push(gram_matrix(&family, &domain, ctx.gram_options())?);
    }
    if let (Some(path), Some(last)) = (&export, reports.last()) {
        export_matrix(last, path, f64_pairs)?;
    }
    let mut art = Artifacts::new(&SweepReport {
        profile: profile.describe(),
        family: family_label,
        reports: &reports,
    })?;
    let (t, p) = sweep_table(&reports);
    art.tables.push(t);
    art.plots.push(p);
    Ok((gram_status(&reports), art))
}

pub fn spherical(ctx: &Ctx, dimension: Option<usize>, export: Option<PathBuf>, f64_pairs: bool) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let weighted = cfg.weighted.unwrap_or(true);
    let sph = SphericalTrapezoid::new(profile.clone(), dimension.or(cfg.dimension).unwrap_or(3))?;
    let domain = Domain::Spherical(sph.clone());
    let mut reports = Vec::new();
    let mut family_label = String::new();
    for (nx, ny) in cfg.truncation_sweep()? {
        let family = spherical_basis(&sph, IndexSet::symmetric(nx, ny), weighted);
        family_label = family.label.clone();
        reports.push(gram_matrix(&family, &domain, ctx.gram_options())?);
    }
    if let (Some(path), Some(last)) = (&export, reports.last()) {
        export_matrix(last, path, f64_pairs)?;
    }
    let mut art = Artifacts::new(&SweepReport {
        profile: profile.describe(),
        family: family_label,
        reports: &reports,
    })?;
    let (t, p) = sweep_table(&reports);
    art.tables.push(t);
    art.plots.push(p);
    Ok((gram_status(&reports), art))
}

pub fn reconstruction(ctx: &Ctx) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let target = cfg
        .target
        .as_ref()
        .ok_or_else(|| CliError::Usage("config is missing `target`".into()))?
        .build();
    let weighted = cfg.weighted.unwrap_or(true);
    let domain = planar_domain(&profile);
    let mut reports = Vec::new();
    for (nx, ny) in cfg.truncation_sweep()? {
        let g = g_family(cfg, &profile, nx)?;
        let family = trapezoid_basis(&profile, g, IndexSet::symmetric(nx, ny), weighted)?;
        reports.push(reconstruct(&target, &family, &domain, ctx.gram_options())?);
    }

    #[derive(Serialize)]
    struct Report<'a> {
        profile: String,
        target: String,
        reports: &'a [expbasis::ReconstructionReport],
    }
    let mut art = Artifacts::new(&Report {
        profile: profile.describe(),
        target: target.describe(),
        reports: &reports,
    })?;
    let mut t = Table::new("residuals", &["n_x", "n_y", "residual", "relative_residual"]);
    for r in &reports {
        t.push([
            r.truncation.0.to_string(),
            r.truncation.1.to_string(),
            num(r.residual),
            num(r.relative_residual),
        ]);
    }
    art.tables.push(t);
    art.plots.push(Plot {
        name: "residual",
        columns: ("n_x", "relative_residual"),
        points: reports.iter().map(|r| (r.truncation.0 as f64, r.relative_residual)).collect(),
    });
    Ok((Status::Pass, art))
}

pub struct MultirectArgs {
    pub steps: Option<Vec<f64>>,
    pub window: Option<i64>,
    pub max_cond: Option<f64>,
    pub y_window: Option<i64>,
    pub seeds: Option<usize>,
}

pub fn multirect(ctx: &Ctx, args: MultirectArgs) -> Outcome {
    let cfg = ctx.config.as_ref();
    let step = match (&args.steps, cfg) {
        (Some(v), _) => StepProfile::new(v.clone())?,
        (None, Some(c)) => c.step_profile()?,
        (None, None) => return Err(CliError::Usage("give --steps or a config with `steps`".into())),
    };
    let defaults = SearchOptions::default();
    let search = SearchOptions {
        window: args.window.or(cfg.and_then(|c| c.window)).unwrap_or(defaults.window),
        max_cond: args.max_cond.or(cfg.and_then(|c| c.max_cond)).unwrap_or(defaults.max_cond),
        seeds: args.seeds.or(cfg.and_then(|c| c.seeds)).unwrap_or(defaults.seeds),
        rng_seed: ctx.seed,
        exec: ctx.exec,
        ..defaults
    };
    let y_window = args.y_window.or(cfg.and_then(|c| c.y_window)).unwrap_or(2);
    let basis = multirect_pipeline(&step, search, y_window, ctx.gram_options())?;
    let report = basis.report();
    let mut art = Artifacts::new(&report)?;
    let mut t = Table::new("selection", &["n", "frequency"]);
    for (n, f) in report.selection.indices.iter().zip(&report.selection.frequencies) {
        t.push([n.to_string(), num(*f)]);
    }
    art.tables.push(t);
    art.plots.push(Plot {
        name: "frequencies",
        columns: ("n", "frequency"),
        points: report
            .selection
            .indices
            .iter()
            .zip(&report.selection.frequencies)
            .map(|(n, f)| (*n as f64, *f))
            .collect(),
    });
    let status = if report.phase_identity_holds { Status::Pass } else { Status::Negative };
    Ok((status, art))
}

pub struct FrameArgs {
    pub probes: Option<usize>,
}

pub fn frame(ctx: &Ctx, args: FrameArgs) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let bbox = cfg.bounding_box.unwrap_or(BoundingBox {
        x: (-profile.upper(), profile.upper()),
        y: (0.0, 1.0),
    });
    let (nx, ny) = cfg.truncation.unwrap_or((4, 4));
    let opts = FrameOptions {
        nx,
        ny,
        probes: args.probes.or(cfg.probes).unwrap_or(32),
        seed: ctx.seed,
        gram: ctx.gram_options(),
    };
    let report = restricted_frame_check(bbox, &planar_domain(&profile), opts)?;
    let tol = 1e-6;
    let ok = report.probe_ratios.iter().all(|r| *r > 0.0 && *r <= report.tight_constant + tol);
    let mut art = Artifacts::new(&report)?;
    let mut t = Table::new("probes", &["probe", "ratio", "tight_constant"]);
    for (i, r) in report.probe_ratios.iter().enumerate() {
        t.push([i.to_string(), num(*r), num(report.tight_constant)]);
    }
    art.tables.push(t);
    art.plots.push(Plot {
        name: "ratios",
        columns: ("probe", "ratio"),
        points: report.probe_ratios.iter().enumerate().map(|(i, r)| (i as f64, *r)).collect(),
    });
    Ok((if ok { Status::Pass } else { Status::Negative }, art))
}

pub struct EvalArgs {
    pub n: i64,
    pub k: i64,
    pub x: f64,
    pub y: f64,
}

pub fn eval(ctx: &Ctx, args: EvalArgs) -> Outcome {
    let cfg = ctx.config()?;
    let profile = cfg.profile()?;
    let domain = planar_domain(&profile);
    if !domain.contains(args.x, args.y) {
        return Err(expbasis::Error::OutsideDomain { x: args.x, y: args.y }.into());
    }
    let g = g_family(cfg, &profile, args.n.abs().max(1))?;
    let family = trapezoid_basis(
        &profile,
        g,
        IndexSet::new(vec![args.n], vec![args.k]),
        cfg.weighted.unwrap_or(true),
    )?;
    let z = family.element(args.n, args.k).eval(args.x, args.y);

    #[derive(Serialize)]
    struct Report {
        family: String,
        n: i64,
        k: i64,
        x: f64,
        y: f64,
        value: [f64; 2],
    }
    let art = Artifacts::new(&Report {
        family: family.label,
        n: args.n,
        k: args.k,
        x: args.x,
        y: args.y,
        value: [z.re, z.im],
    })?;
    Ok((Status::Pass, art))
}
