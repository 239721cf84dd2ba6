//! Command-line front end: solve a single non-parametric problem, run the
//! adaptive curve approximation, or validate a finished run against fresh
//! reference solves.

mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{load_config, LoadedConfig};
use output::{fmt_float, ValidationRow};
use pevp::adaptive::{model_error_at, run_adaptive_with, SnapshotCache};
use pevp::{solve_nonparametric, BeynError, Complex64, CurveModel, EigenSnapshot};
use std::path::PathBuf;

const EXIT_CONFIG: i32 = 1;
const EXIT_SOLVER: i32 = 2;
const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "pevp",
    about = "Eigenvalue curves of parametric nonlinear eigenvalue problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the probe seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the non-parametric problem at one parameter value and print
    /// the certified eigenvalues.
    SolveOne {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter value.
        #[arg(long)]
        p: f64,
    },
    /// Run the adaptive approximation; writes curves.csv, report.json,
    /// and timings.json.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Curve table sampling density: points per collocation point.
        #[arg(long, default_value_t = 10)]
        samples_per_point: usize,
    },
    /// Validate a finished run against fresh solves on a parameter grid;
    /// writes validation.csv.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding the run outputs (default: the configured
        /// output directory).
        #[arg(long)]
        run_dir: Option<PathBuf>,
        /// Number of uniform validation points.
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// File with one parameter value per line (overrides --grid).
        #[arg(long)]
        grid_file: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    // BLAS kernels stay single-threaded; parallelism lives in the node
    // and test-point loops
    std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("initializing thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> i32 {
    let (common, result): (&CommonArgs, Result<i32>) = match &cli.command {
        Command::SolveOne { common, p } => (common, cmd_solve_one(common, *p)),
        Command::Run {
            common,
            out,
            samples_per_point,
        } => (common, cmd_run(common, out.clone(), *samples_per_point)),
        Command::Validate {
            common,
            run_dir,
            grid,
            grid_file,
        } => (
            common,
            cmd_validate(common, run_dir.clone(), *grid, grid_file.clone()),
        ),
    };
    let _ = common;
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            classify_error(&err)
        }
    }
}

/// Configuration problems exit with 1, solver failures with 2.
fn classify_error(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<BeynError<Complex64>>().is_some()
            || cause.downcast_ref::<pevp::AdaptiveError<Complex64>>().is_some()
        {
            return EXIT_SOLVER;
        }
    }
    EXIT_CONFIG
}

fn cmd_solve_one(common: &CommonArgs, p: f64) -> Result<i32> {
    init_threads(common.threads)?;
    let loaded = load_config(&common.config, common.seed)?;
    let snapshot = solve_nonparametric(
        loaded.problem.as_ref(),
        p,
        &loaded.contour,
        &loaded.adaptive.beyn,
    )
    .map_err(anyhow::Error::from)
    .context("non-parametric solve failed")?;
    print_snapshot(&snapshot);
    Ok(0)
}

fn print_snapshot(snapshot: &EigenSnapshot<Complex64>) {
    println!("p,re,im,residual,near_contour");
    for ((lambda, residual), near) in snapshot
        .eigenvalues()
        .iter()
        .zip(snapshot.residuals())
        .zip(snapshot.near_contour())
    {
        println!(
            "{},{},{},{},{}",
            fmt_float(snapshot.p()),
            fmt_float(lambda.re),
            fmt_float(lambda.im),
            fmt_float(*residual),
            near
        );
    }
}

fn cmd_run(common: &CommonArgs, out: Option<PathBuf>, samples_per_point: usize) -> Result<i32> {
    init_threads(common.threads)?;
    let loaded = load_config(&common.config, common.seed)?;
    let out_dir = out.unwrap_or_else(|| loaded.output_dir.clone());
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let mut cache = SnapshotCache::new();
    let mut progress = |iteration: usize, grid: usize, err: f64| {
        log::info!("iteration {iteration}: {grid} collocation points, max test error {err:.3e}");
    };
    let (model, report) = run_adaptive_with(
        loaded.problem.as_ref(),
        &loaded.contour,
        &loaded.adaptive,
        &mut cache,
        Some(&mut progress),
    )
    .map_err(anyhow::Error::from)
    .context("adaptive run failed")?;

    output::write_curves_csv(&out_dir.join("curves.csv"), &model, &report, samples_per_point)?;
    output::write_report_json(
        &out_dir.join("report.json"),
        &loaded.problem_kind,
        loaded.adaptive.beyn.seed,
        loaded.adaptive.tolerance,
        &model,
        &report,
    )?;
    output::write_timings_json(&out_dir.join("timings.json"), &report)?;
    log::info!(
        "run finished: converged = {}, {} collocation points, outputs in {}",
        report.converged,
        report.final_grid.len(),
        out_dir.display()
    );
    Ok(if report.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn cmd_validate(
    common: &CommonArgs,
    run_dir: Option<PathBuf>,
    grid: usize,
    grid_file: Option<PathBuf>,
) -> Result<i32> {
    init_threads(common.threads)?;
    let loaded = load_config(&common.config, common.seed)?;
    let run_dir = run_dir.unwrap_or_else(|| loaded.output_dir.clone());
    let report_path = run_dir.join("report.json");
    let report_text = std::fs::read_to_string(&report_path)
        .with_context(|| format!("cannot read {} (run `pevp run` first)", report_path.display()))?;
    let report: serde_json::Value = serde_json::from_str(&report_text)
        .with_context(|| format!("cannot parse {}", report_path.display()))?;
    let final_grid: Vec<f64> = report["final_grid"]
        .as_array()
        .context("report.json: final_grid missing")?
        .iter()
        .map(|v| v.as_f64().context("final_grid entry is not a number"))
        .collect::<Result<_>>()?;

    let model = rebuild_model(&loaded, &final_grid)?;

    let points: Vec<f64> = match grid_file {
        Some(path) => std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}", path.display()))?
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|l| l.trim().parse::<f64>().context("bad grid file entry"))
            .collect::<Result<_>>()?,
        None => {
            anyhow::ensure!(grid >= 2, "--grid must be at least 2");
            let (lo, hi) = (final_grid[0], final_grid[final_grid.len() - 1]);
            (0..grid)
                .map(|k| lo + (hi - lo) * k as f64 / (grid - 1) as f64)
                .collect()
        }
    };

    let mut cache = SnapshotCache::new();
    cache
        .ensure(
            loaded.problem.as_ref(),
            &loaded.contour,
            &loaded.adaptive.beyn,
            &points,
        )
        .map_err(anyhow::Error::from)
        .context("validation solves failed")?;
    let mut rows = Vec::with_capacity(points.len());
    let mut global_max = 0.0f64;
    for &p in &points {
        let reference = cache.get(p).expect("just ensured");
        let (err, _) = model_error_at(&model, reference)?;
        let predicted_count = model.evaluate(p)?.len();
        global_max = global_max.max(err);
        rows.push(ValidationRow {
            p,
            max_matched_error: err,
            predicted_count,
            reference_count: reference.len(),
        });
    }

    std::fs::create_dir_all(&run_dir)?;
    output::write_validation_csv(&run_dir.join("validation.csv"), &rows, global_max)?;
    println!("global_max_matched_error,{}", fmt_float(global_max));
    Ok(0)
}

/// Re-solve the final collocation grid and rebuild the model; with the
/// same seed this reproduces the run's model deterministically.
fn rebuild_model(loaded: &LoadedConfig, final_grid: &[f64]) -> Result<CurveModel<Complex64>> {
    anyhow::ensure!(
        final_grid.len() >= 2 && final_grid.windows(2).all(|w| w[0] < w[1]),
        "report.json: final_grid must be strictly increasing"
    );
    let mut cache = SnapshotCache::new();
    cache
        .ensure(
            loaded.problem.as_ref(),
            &loaded.contour,
            &loaded.adaptive.beyn,
            final_grid,
        )
        .map_err(anyhow::Error::from)
        .context("re-solving the collocation grid failed")?;
    let snapshots: Vec<EigenSnapshot<Complex64>> = final_grid
        .iter()
        .map(|&p| cache.get(p).expect("ensured").clone())
        .collect();
    CurveModel::build(
        &snapshots,
        loaded.adaptive.interp,
        loaded.adaptive.bifurcation_delta,
        loaded.adaptive.stencil_half_width,
    )
    .context("rebuilding the curve model failed")
}
