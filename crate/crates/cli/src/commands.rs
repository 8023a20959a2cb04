use std::path::{Path, PathBuf};

use serde::Serialize;
use ssc_core::cluster::{evaluate, Verdict};
use ssc_core::experiment::{run_grid, ExperimentGrid};
use ssc_core::geometry::{diagnose as measure, DiagnoseConfig, GeometryReport, InradiusConfig};
use ssc_core::io::{
    read_coefficients, read_data_matrix, read_ensemble, read_json, read_labels, write_coefficients,
    write_json,
};
use ssc_core::simulate::{generate as draw, write_dataset, ModelSpec};
use ssc_core::solver::{solve as run_solver, SolveConfig, SolveMode, SolveStatus};
use ssc_core::theory::{assess, RangeConstants, TheoryReport};
use ssc_core::{normalize_columns, LabeledDataset, Result, RngSpec, SscError};

use crate::Outcome;

pub fn generate(spec_path: &Path, seed: u64, out: &Path) -> Result<Outcome> {
    let spec: ModelSpec = read_json(spec_path).map_err(|e| match e {
        SscError::Json(j) => SscError::InvalidSpec(j.to_string()),
        other => other,
    })?;
    let rng = RngSpec::new(seed);
    let dataset = draw(&spec, &rng)?;
    let summary = write_dataset(out, &dataset, &spec, &rng)?;
    println!(
        "n = {}, N = {}, L = {}, measured delta = {:.6}",
        summary.n, summary.samples, summary.subspaces, summary.measured_delta
    );
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SolveReport {
    lambda: f64,
    mode: SolveMode,
    n: usize,
    samples: usize,
    objective: f64,
    iterations: usize,
    status: SolveStatus,
    certified_columns: usize,
    trivial_columns: usize,
    /// Every column is zero.
    trivial: bool,
}

pub fn solve(
    data: &Path,
    lambda: Option<f64>,
    mode: SolveMode,
    max_iter: usize,
    normalize: bool,
    certify: bool,
    out: &Path,
) -> Result<Outcome> {
    let mut x = read_data_matrix(data)?;
    if normalize {
        x = normalize_columns(&x)?;
    }
    let lambda = lambda.unwrap_or((x.n() as f64).sqrt());
    let mut cfg = SolveConfig::new(lambda).with_mode(mode);
    cfg.max_iter = max_iter;
    cfg.certify = certify;
    let sol = run_solver(&x, &cfg, None)?;
    std::fs::create_dir_all(out).map_err(|e| SscError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    write_coefficients(&out.join("C.csv"), &sol.coefficients)?;
    let c = sol.coefficients.values();
    let trivial_columns = c
        .column_iter()
        .filter(|col| col.iter().all(|&v| v == 0.0))
        .count();
    let report = SolveReport {
        lambda,
        mode,
        n: x.n(),
        samples: x.len(),
        objective: sol.objective,
        iterations: sol.iterations,
        status: sol.status,
        certified_columns: sol.certified_columns,
        trivial_columns,
        trivial: trivial_columns == x.len(),
    };
    write_json(&out.join("solve.json"), &report)?;
    println!(
        "lambda = {lambda}, status = {:?}, objective = {:.6}, trivial columns = {trivial_columns}",
        sol.status, sol.objective
    );
    Ok(if sol.status == SolveStatus::MaxIterExceeded {
        Outcome::IterationCap
    } else {
        Outcome::Done
    })
}

pub struct DiagnoseArgs {
    pub data: PathBuf,
    pub clean: Option<PathBuf>,
    pub labels: PathBuf,
    pub ensemble: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub t: f64,
    pub budget: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct DiagnoseReport {
    geometry: GeometryReport,
    /// Absent without clean data, since the noise level is unknown.
    theory: Option<TheoryReport>,
    sigma: Option<f64>,
}

/// Root mean square of `||x_i - y_i||`.
fn noise_rms(dataset: &LabeledDataset) -> Option<f64> {
    let y = dataset.clean.as_ref()?;
    let z = dataset.data.values() - y.values();
    let total: f64 = z.column_iter().map(|c| c.norm_squared()).sum();
    Some((total / z.ncols() as f64).sqrt())
}

pub fn diagnose(args: DiagnoseArgs) -> Result<Outcome> {
    let ensemble_path = args.ensemble.as_ref().ok_or_else(|| {
        SscError::InvalidInput("--ensemble is required to measure incoherence and inradius".into())
    })?;
    let data = read_data_matrix(&args.data)?;
    let clean = args.clean.as_deref().map(read_data_matrix).transpose()?;
    let labels = read_labels(&args.labels)?;
    let ensemble = read_ensemble(ensemble_path)?;
    let dataset = LabeledDataset::new(data, labels, clean, Some(ensemble))?;
    let lambda = args.lambda.unwrap_or((dataset.data.n() as f64).sqrt());
    let mut cfg = DiagnoseConfig::new(lambda);
    cfg.inradius = InradiusConfig::with_budget(args.budget);
    cfg.rng = RngSpec::new(args.seed);
    let geometry = measure(&dataset, &cfg)?;
    let sigma = args.sigma.or_else(|| noise_rms(&dataset));
    let theory = if geometry.delta.is_some() {
        Some(assess(
            &geometry,
            dataset.data.n(),
            &dataset.counts(),
            sigma,
            args.t,
            RangeConstants::default(),
        )?)
    } else {
        None
    };
    if let Some(t) = &theory {
        let d = &t.deterministic;
        println!(
            "r = {:?}, mu = {:?}, delta = {:?}; deterministic range ({:?}, {}) gap_ok = {}",
            geometry.r,
            geometry.mu,
            geometry.delta,
            d.range.lower,
            d.range.upper.map_or("inf".to_string(), |u| u.to_string()),
            d.gap_ok
        );
    }
    write_json(
        &args.out,
        &DiagnoseReport {
            geometry,
            theory,
            sigma,
        },
    )?;
    Ok(Outcome::Done)
}

pub fn cluster(
    coefficients: &Path,
    labels: &Path,
    k: Option<usize>,
    seed: u64,
    support_eps: f64,
    lambda: Option<f64>,
    out: &Path,
) -> Result<Outcome> {
    let c = read_coefficients(coefficients)?;
    let truth = read_labels(labels)?;
    let k = k.unwrap_or_else(|| truth.iter().max().map_or(0, |m| m + 1));
    let result = evaluate(&c, &truth, k, support_eps, lambda, &RngSpec::new(seed))?;
    write_json(out, &result)?;
    println!(
        "accuracy = {}, verdict = {}, rel_violation = {:?}",
        result.accuracy,
        result.verdict.as_str(),
        result.rel_violation
    );
    Ok(Outcome::Done)
}

pub fn experiment(
    grid_path: &Path,
    out: &Path,
    workers: usize,
    seeds: Option<usize>,
    keep_coefficients: bool,
    cluster: bool,
) -> Result<Outcome> {
    let mut grid: ExperimentGrid = read_json(grid_path).map_err(|e| match e {
        SscError::Json(j) => SscError::InvalidSpec(j.to_string()),
        other => other,
    })?;
    if let Some(s) = seeds {
        grid.seeds = s;
    }
    grid.keep_coefficients |= keep_coefficients;
    grid.cluster |= cluster;
    let cells = run_grid(&grid, workers, Some(out))?;
    let count = |v: Verdict| cells.iter().filter(|c| c.verdict == v).count();
    println!(
        "{} cells: {} white, {} gray, {} trivial",
        cells.len(),
        count(Verdict::White),
        count(Verdict::Gray),
        count(Verdict::Trivial)
    );
    Ok(
        if cells
            .iter()
            .any(|c| c.status == SolveStatus::MaxIterExceeded)
        {
            Outcome::IterationCap
        } else {
            Outcome::Done
        },
    )
}
