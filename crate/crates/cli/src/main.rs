//! `expbasis`: experiments on exponential Riesz bases.
//!
//! Exit status: 0 when the run passes or certifies, 2 for mathematically
//! honest negatives (boundary or violated Kadec checks, failed searches,
//! ill-conditioned sections), 1 for errors. Errors are printed to stderr
//! as one JSON object with a machine-readable `code`.

mod artifacts;
mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use expbasis::config::{Config, ExperimentKind, ExperimentManifest};
use expbasis::Execution;

use commands::{Ctx, EvalArgs, FrameArgs, MultirectArgs, StabilityArgs, Status};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] expbasis::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
            CliError::Csv(_) => "csv",
        }
    }
}

#[derive(Parser)]
#[command(name = "expbasis", version, about = "Exponential Riesz bases: Gram certification, stability and reconstruction")]
struct Cli {
    /// JSON experiment config (`"schema_version": 1`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report path (`*.json`) or output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Per-entry quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a profile on a grid.
    Validate {
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Certified step approximations s_n.
    Approximate {
        #[arg(long, value_delimiter = ',')]
        n: Vec<u32>,
        #[arg(long)]
        audit_grid: Option<usize>,
    },
    /// Kadec check and Paley-Wiener Monte Carlo.
    Stability {
        #[command(subcommand)]
        action: StabilityAction,
    },
    /// Truncated Gram matrices over a truncation sweep.
    Gram {
        /// Also write the last matrix (`.csv`, otherwise binary).
        #[arg(long)]
        export: Option<PathBuf>,
        /// Binary export with f64 pairs instead of f32.
        #[arg(long)]
        f64: bool,
    },
    /// Least-squares reconstruction of the configured target.
    Reconstruct,
    /// Multi-rectangle bases.
    Multirect {
        #[command(subcommand)]
        action: MultirectAction,
    },
    /// Radial family on a spherical trapezoid.
    Spherical {
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        export: Option<PathBuf>,
        #[arg(long)]
        f64: bool,
    },
    /// Restricted-frame check against a bounding box.
    Frame {
        #[arg(long)]
        probes: Option<usize>,
    },
    /// Evaluate one basis element at a point.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, allow_hyphen_values = true)]
        k: i64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Run an experiment manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Subcommand)]
enum StabilityAction {
    Check {
        #[arg(long)]
        nmax: Option<i64>,
        #[arg(long)]
        grid: Option<usize>,
        /// Monte Carlo trials for the Paley-Wiener inequality.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Subcommand)]
enum MultirectAction {
    Build {
        /// Step values, e.g. "1,0.5".
        #[arg(long, value_delimiter = ',')]
        steps: Option<Vec<f64>>,
        #[arg(long)]
        window: Option<i64>,
        #[arg(long)]
        max_cond: Option<f64>,
        #[arg(long)]
        y_window: Option<i64>,
        #[arg(long)]
        seeds: Option<usize>,
    },
}

fn load_config(path: Option<&Path>) -> Result<Option<Config>, CliError> {
    path.map(|p| Config::from_path(p).map_err(CliError::from)).transpose()
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<(&'static str, commands::Outcome), CliError> {
    Ok(match command {
        Command::Validate { grid } => ("validate", commands::validate(ctx, grid)),
        Command::Approximate { n, audit_grid } => ("approximate", commands::approximate(ctx, n, audit_grid)),
        Command::Stability {
            action: StabilityAction::Check { nmax, grid, trials },
        } => (
            "stability",
            commands::stability(
                ctx,
                StabilityArgs {
                    n_max: nmax,
                    grid,
                    trials,
                },
            ),
        ),
        Command::Gram { export, f64 } => ("gram", commands::gram(ctx, export, f64)),
        Command::Reconstruct => ("reconstruct", commands::reconstruction(ctx)),
        Command::Multirect {
            action:
                MultirectAction::Build {
                    steps,
                    window,
                    max_cond,
                    y_window,
                    seeds,
                },
        } => (
            "multirect",
            commands::multirect(
                ctx,
                MultirectArgs {
                    steps,
                    window,
                    max_cond,
                    y_window,
                    seeds,
                },
            ),
        ),
        Command::Spherical { dimension, export, f64 } => ("spherical", commands::spherical(ctx, dimension, export, f64)),
        Command::Frame { probes } => ("frame", commands::frame(ctx, FrameArgs { probes })),
        Command::Eval { n, k, x, y } => ("eval", commands::eval(ctx, EvalArgs { n, k, x, y })),
        Command::Run { .. } => return Err(CliError::Usage("manifests cannot nest".into())),
    })
}

fn manifest_command(kind: ExperimentKind) -> Command {
    match kind {
        ExperimentKind::Validate => Command::Validate { grid: None },
        ExperimentKind::Approximate => Command::Approximate {
            n: Vec::new(),
            audit_grid: None,
        },
        ExperimentKind::Stability => Command::Stability {
            action: StabilityAction::Check {
                nmax: None,
                grid: None,
                trials: None,
            },
        },
        ExperimentKind::Gram => Command::Gram { export: None, f64: false },
        ExperimentKind::Reconstruct => Command::Reconstruct,
        ExperimentKind::Multirect => Command::Multirect {
            action: MultirectAction::Build {
                steps: None,
                window: None,
                max_cond: None,
                y_window: None,
                seeds: None,
            },
        },
        ExperimentKind::Spherical => Command::Spherical {
            dimension: None,
            export: None,
            f64: false,
        },
        ExperimentKind::RestrictedFrame => Command::Frame { probes: None },
    }
}

/// Report for an honest negative that surfaced as an error.
fn negative_report(err: &expbasis::Error) -> serde_json::Value {
    let mut v = serde_json::json!({
        "status": "negative",
        "code": err.code(),
        "message": err.to_string(),
    });
    match err {
        expbasis::Error::SearchFailed {
            best,
            max_cond,
            selection,
        } => {
            v["best_condition_number"] = (*best).into();
            v["max_cond"] = (*max_cond).into();
            v["selection"] = serde_json::to_value(selection).unwrap_or_default();
        }
        expbasis::Error::PwViolation {
            ratio,
            trial,
            coefficients,
            ..
        } => {
            v["ratio"] = (*ratio).into();
            v["trial"] = (*trial).into();
            v["coefficients"] = serde_json::to_value(coefficients).unwrap_or_default();
        }
        _ => {}
    }
    v
}

fn run(cli: Cli) -> Result<Status, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let exec = if cli.threads == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let (ctx, out, command) = match cli.command {
        Command::Run { manifest } => {
            let m = ExperimentManifest::from_path(&manifest)?;
            let ctx = Ctx {
                config: load_config(Some(&m.config))?,
                seed: m.seed,
                tol: m.tol.or(cli.tol),
                exec,
            };
            (ctx, Some(m.output_dir), manifest_command(m.experiment))
        }
        command => {
            let ctx = Ctx {
                config: load_config(cli.config.as_deref())?,
                seed: cli.seed,
                tol: cli.tol,
                exec,
            };
            (ctx, cli.out, command)
        }
    };
    let (name, outcome) = dispatch(&ctx, command)?;
    let (status, art) = match outcome {
        Ok(v) => v,
        Err(CliError::Core(e)) if e.is_negative_outcome() => {
            let art = artifacts::Artifacts {
                report: negative_report(&e),
                tables: Vec::new(),
                plots: Vec::new(),
            };
            (Status::Negative, art)
        }
        Err(e) => return Err(e),
    };
    artifacts::emit(&art, out.as_deref(), name, ctx.seed)?;
    Ok(status)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Negative) => ExitCode::from(2),
        Err(e) => {
            let msg = serde_json::json!({ "error": { "code": e.code(), "message": e.to_string() } });
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
