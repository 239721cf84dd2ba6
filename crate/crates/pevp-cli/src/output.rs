//! Deterministic output files: curves.csv, report.json, timings.json,
//! validation.csv.

use anyhow::{Context, Result};
use pevp::adaptive::RunReport;
use pevp::{Complex64, CurveModel};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Round-trip-safe float formatting: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Curve table sampled on a dense uniform grid (by default 10 times the
/// collocation count), stable-sorted by (p, track_id).
pub fn write_curves_csv(
    path: &Path,
    model: &CurveModel<Complex64>,
    report: &RunReport<f64>,
    samples_per_point: usize,
) -> Result<()> {
    let grid = model.grid();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let count = (samples_per_point * report.final_grid.len()).max(2);
    let mut out = String::from("p,track_id,re,im,segment_kind\n");
    for i in 0..count {
        let p = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        let samples = model
            .evaluate(p)
            .with_context(|| format!("evaluating curves at p = {p}"))?;
        for s in samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(p),
                s.track,
                fmt_float(s.value.re),
                fmt_float(s.value.im),
                s.kind.label()
            ));
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Deterministic run summary (timings live in timings.json instead, so
/// that identical seeds produce byte-identical reports).
#[derive(Serialize)]
pub struct ReportJson {
    pub problem: String,
    pub seed: u64,
    pub tolerance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub snapshots_computed: usize,
    pub track_count: usize,
    pub final_grid: Vec<f64>,
    pub flagged_spans: Vec<[f64; 2]>,
    pub max_test_errors: Vec<f64>,
}

pub fn write_report_json(
    path: &Path,
    problem: &str,
    seed: u64,
    tolerance: f64,
    model: &CurveModel<Complex64>,
    report: &RunReport<f64>,
) -> Result<()> {
    let payload = ReportJson {
        problem: problem.to_string(),
        seed,
        tolerance,
        iterations: report.iterations,
        converged: report.converged,
        snapshots_computed: report.snapshots_computed,
        track_count: model.tracks().len(),
        final_grid: report.final_grid.clone(),
        flagged_spans: report.flagged_spans.iter().map(|&(a, b)| [a, b]).collect(),
        max_test_errors: report.max_test_errors.clone(),
    };
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, &payload)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct TimingsJson {
    phases: Vec<PhaseJson>,
    total_seconds: f64,
}

#[derive(Serialize)]
struct PhaseJson {
    iteration: usize,
    solve_seconds: f64,
    model_seconds: f64,
    test_seconds: f64,
}

pub fn write_timings_json(path: &Path, report: &RunReport<f64>) -> Result<()> {
    let phases: Vec<PhaseJson> = report
        .phase_seconds
        .iter()
        .enumerate()
        .map(|(i, ph)| PhaseJson {
            iteration: i + 1,
            solve_seconds: ph.solve,
            model_seconds: ph.model,
            test_seconds: ph.test,
        })
        .collect();
    let total_seconds = phases
        .iter()
        .map(|p| p.solve_seconds + p.model_seconds + p.test_seconds)
        .sum();
    let payload = TimingsJson {
        phases,
        total_seconds,
    };
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, &payload)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// One validation row per test point plus a trailing summary comment.
pub struct ValidationRow {
    pub p: f64,
    pub max_matched_error: f64,
    pub predicted_count: usize,
    pub reference_count: usize,
}

pub fn write_validation_csv(path: &Path, rows: &[ValidationRow], global_max: f64) -> Result<()> {
    let mut out = String::from("p,max_matched_error,predicted_count,reference_count\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(row.p),
            fmt_float(row.max_matched_error),
            row.predicted_count,
            row.reference_count
        ));
    }
    out.push_str(&format!("# global_max_matched_error,{}\n", fmt_float(global_max)));
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
