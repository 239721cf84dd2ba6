//! Run configuration file (TOML) and its validation.

use anyhow::{bail, Context, Result};
use pevp::adaptive::{AdaptiveConfig, MismatchPolicy};
use pevp::curves::{InterpolationConfig, MigrationMode, Scheme};
use pevp::problems::{
    cubic_companion, delayed_heat, load_split_form, SplitFormProblem,
};
use pevp::{BeynConfig, Complex64, Contour, ParametricProblem};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub problem: ProblemSection,
    pub contour: ContourSection,
    #[serde(default)]
    pub beyn: BeynSection,
    #[serde(default)]
    pub interpolation: InterpolationSection,
    pub adaptive: AdaptiveSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    /// One of: toy_bifurcation, cubic_companion, delayed_heat, split_form.
    pub kind: String,
    /// delayed_heat: number of finite-difference intervals (default 500).
    pub grid_intervals: Option<usize>,
    /// split_form: manifest path (relative to the config file).
    pub manifest: Option<PathBuf>,
    /// toy_bifurcation: optional parameter range override.
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSection {
    pub center_re: f64,
    #[serde(default)]
    pub center_im: f64,
    pub radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeynSection {
    pub moment_blocks: usize,
    pub probe_columns: usize,
    pub quadrature_nodes: usize,
    pub rank_rtol: f64,
    pub residual_tol: f64,
    pub inside_margin: f64,
    pub seed: u64,
}

impl Default for BeynSection {
    fn default() -> Self {
        let d = BeynConfig::<f64>::default();
        Self {
            moment_blocks: d.moment_blocks,
            probe_columns: d.probe_columns,
            quadrature_nodes: d.quadrature_nodes,
            rank_rtol: d.rank_rtol,
            residual_tol: d.residual_tol,
            inside_margin: d.inside_margin,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpolationSection {
    /// "linear" or "spline".
    pub scheme: String,
    pub spline_order: usize,
    /// "extrapolate" or "harmonic".
    pub migration_mode: String,
    pub extrapolation_min_points: usize,
}

impl Default for InterpolationSection {
    fn default() -> Self {
        Self {
            scheme: "linear".into(),
            spline_order: 3,
            migration_mode: "extrapolate".into(),
            extrapolation_min_points: 2,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSection {
    pub tolerance: f64,
    /// Explicit initial collocation grid ...
    pub initial_grid: Option<Vec<f64>>,
    /// ... or a uniform grid with this many points over the range.
    pub initial_grid_count: Option<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_stencil")]
    pub stencil_half_width: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    pub min_interval: Option<f64>,
    #[serde(default = "default_policy")]
    pub mismatch_policy: String,
    #[serde(default)]
    pub quarter_point_tests: bool,
}

fn default_delta() -> f64 {
    0.1
}
fn default_stencil() -> usize {
    4
}
fn default_max_iterations() -> usize {
    20
}
fn default_policy() -> String {
    "lenient".into()
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// A fully validated configuration, ready to run.
pub struct LoadedConfig {
    pub problem: Box<dyn ParametricProblem<Complex64>>,
    pub problem_kind: String,
    pub contour: Contour<Complex64>,
    pub adaptive: AdaptiveConfig<f64>,
    pub output_dir: PathBuf,
}

enum BuiltProblem {
    Toy(pevp::problems::ToyBifurcation<f64>),
    Cubic(pevp::problems::CubicCompanion),
    Heat(pevp::problems::DelayedHeat<Complex64>),
    Split(SplitFormProblem<Complex64>),
}

pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let file: RunConfigFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let problem = match file.problem.kind.as_str() {
        "toy_bifurcation" => {
            let range = (
                file.problem.p_min.unwrap_or(-1.0),
                file.problem.p_max.unwrap_or(1.0),
            );
            if !(range.0 < range.1) {
                bail!("problem.p_min must be below problem.p_max");
            }
            BuiltProblem::Toy(pevp::problems::ToyBifurcation::with_range(range))
        }
        "cubic_companion" => BuiltProblem::Cubic(cubic_companion()),
        "delayed_heat" => {
            let m = file.problem.grid_intervals.unwrap_or(500);
            if m < 3 {
                bail!("problem.grid_intervals must be at least 3");
            }
            BuiltProblem::Heat(delayed_heat(m))
        }
        "split_form" => {
            let manifest = file
                .problem
                .manifest
                .as_ref()
                .context("problem.manifest is required for kind = \"split_form\"")?;
            let manifest = base.join(manifest);
            BuiltProblem::Split(load_split_form::<Complex64>(&manifest)?)
        }
        other => bail!(
            "unknown problem.kind {other:?} (expected toy_bifurcation, cubic_companion, \
             delayed_heat, or split_form)"
        ),
    };
    let problem: Box<dyn ParametricProblem<Complex64>> = match problem {
        BuiltProblem::Toy(p) => Box::new(p),
        BuiltProblem::Cubic(p) => Box::new(p),
        BuiltProblem::Heat(p) => Box::new(p),
        BuiltProblem::Split(p) => Box::new(p),
    };

    if !(file.contour.radius > 0.0) {
        bail!("contour.radius must be positive");
    }
    let contour = Contour::new(
        Complex64::new(file.contour.center_re, file.contour.center_im),
        file.contour.radius,
    )?;

    let b = &file.beyn;
    if b.moment_blocks == 0 || b.probe_columns == 0 {
        bail!("beyn.moment_blocks and beyn.probe_columns must be positive");
    }
    if b.quadrature_nodes < 4 {
        bail!("beyn.quadrature_nodes must be at least 4");
    }
    if !(b.rank_rtol > 0.0) || !(b.residual_tol > 0.0) {
        bail!("beyn tolerances must be positive");
    }
    if !(0.0..1.0).contains(&b.inside_margin) {
        bail!("beyn.inside_margin must lie in [0, 1)");
    }
    let beyn = BeynConfig {
        moment_blocks: b.moment_blocks,
        probe_columns: b.probe_columns,
        quadrature_nodes: b.quadrature_nodes,
        rank_rtol: b.rank_rtol,
        residual_tol: b.residual_tol,
        inside_margin: b.inside_margin,
        seed: seed_override.unwrap_or(b.seed),
    };

    let i = &file.interpolation;
    let scheme = match i.scheme.as_str() {
        "linear" => Scheme::PiecewiseLinear,
        "spline" => {
            if !matches!(i.spline_order, 3 | 5 | 7) {
                bail!("interpolation.spline_order must be 3, 5, or 7");
            }
            Scheme::Spline(i.spline_order)
        }
        other => bail!("unknown interpolation.scheme {other:?}"),
    };
    let migration_mode = match i.migration_mode.as_str() {
        "extrapolate" => MigrationMode::Extrapolate,
        "harmonic" => MigrationMode::HarmonicMean,
        other => bail!("unknown interpolation.migration_mode {other:?}"),
    };
    if i.extrapolation_min_points == 0 {
        bail!("interpolation.extrapolation_min_points must be positive");
    }
    let interp = InterpolationConfig {
        scheme,
        migration_mode,
        extrapolation_min_points: i.extrapolation_min_points,
    };

    let a = &file.adaptive;
    if !(a.tolerance > 0.0) {
        bail!("adaptive.tolerance must be positive");
    }
    if !(a.delta > 0.0) {
        bail!("adaptive.delta must be positive");
    }
    if a.max_iterations == 0 {
        bail!("adaptive.max_iterations must be positive");
    }
    let (p_min, p_max) = problem.param_range();
    let initial_grid = match (&a.initial_grid, a.initial_grid_count) {
        (Some(grid), None) => grid.clone(),
        (None, Some(count)) => {
            if count < 2 {
                bail!("adaptive.initial_grid_count must be at least 2");
            }
            (0..count)
                .map(|k| p_min + (p_max - p_min) * k as f64 / (count - 1) as f64)
                .collect()
        }
        (None, None) => vec![p_min, p_max],
        (Some(_), Some(_)) => {
            bail!("set either adaptive.initial_grid or adaptive.initial_grid_count, not both")
        }
    };
    if initial_grid.len() < 2 || !initial_grid.windows(2).all(|w| w[0] < w[1]) {
        bail!("adaptive.initial_grid must be strictly increasing with at least 2 points");
    }
    if let Some(min_interval) = a.min_interval {
        if !(min_interval > 0.0) {
            bail!("adaptive.min_interval must be positive");
        }
    }
    let mismatch_policy = match a.mismatch_policy.as_str() {
        "lenient" => MismatchPolicy::Lenient,
        "strict" => MismatchPolicy::Strict,
        other => bail!("unknown adaptive.mismatch_policy {other:?}"),
    };

    let adaptive = AdaptiveConfig {
        tolerance: a.tolerance,
        initial_grid,
        max_iterations: a.max_iterations,
        min_interval: a.min_interval,
        mismatch_policy,
        beyn,
        interp,
        bifurcation_delta: a.delta,
        stencil_half_width: a.stencil_half_width,
        quarter_point_tests: a.quarter_point_tests,
    };

    let output_dir = file
        .output
        .dir
        .map(|d| if d.is_absolute() { d } else { base.join(d) })
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(LoadedConfig {
        problem,
        problem_kind: file.problem.kind,
        contour,
        adaptive,
        output_dir,
    })
}
