//! Phase-transition grids: a log-spaced lambda axis crossed with one model
//! axis (noise level, subspace dimension or number of subspaces), repeated
//! over seeds.
//!
//! A strip is one (axis value, seed) pair. Its dataset is drawn from child
//! stream `[axis index, seed index]` of the master seed, and its lambdas are
//! solved in ascending order, each warm-started from the previous solution.
//! Strips are independent, so the output does not depend on how many
//! workers run them. Finished strips are saved under `partial/` while the
//! grid runs; a rerun on the same directory picks them up.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{check_sep_and_trivial, evaluate, rel_violation, Verdict, GRAY_THRESHOLD};
use crate::data::LabeledDataset;
use crate::error::{Result, SscError};
use crate::io::{read_json, write_coefficients, write_json};
use crate::rng::RngSpec;
use crate::simulate::{generate, Model, ModelSpec, Noise};
use crate::solver::{solve, SolveConfig, SolveMode, SolveStatus, SUPPORT_EPS_REL};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SSC_THREADS";

const MARKER: &str = "in_progress.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Axis2 {
    Sigma(Vec<f64>),
    D(Vec<usize>),
    L(Vec<usize>),
}

impl Axis2 {
    pub fn name(&self) -> &'static str {
        match self {
            Axis2::Sigma(_) => "sigma",
            Axis2::D(_) => "d",
            Axis2::L(_) => "L",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis2::Sigma(v) => v.len(),
            Axis2::D(v) => v.len(),
            Axis2::L(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Axis2::Sigma(v) => v[i],
            Axis2::D(v) => v[i] as f64,
            Axis2::L(v) => v[i] as f64,
        }
    }
}

/// Model parameters shared by every cell; the second axis overrides one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBase {
    #[serde(default = "default_model")]
    pub model: Model,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub kappa: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub normalize_noisy: bool,
}

fn default_model() -> Model {
    Model::FullyRandom
}
fn default_points() -> usize {
    25
}
fn default_seeds() -> usize {
    1
}
fn default_eps() -> f64 {
    SUPPORT_EPS_REL
}
fn default_gray() -> f64 {
    GRAY_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub base: GridBase,
    pub axis2: Axis2,
    /// Explicit lambda axis; when absent, `lambda_points` log-spaced values
    /// in `[sqrt(n) 1e-2, sqrt(n) 1e3]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default = "default_points")]
    pub lambda_points: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub mode: SolveMode,
    #[serde(default = "default_eps")]
    pub support_eps_rel: f64,
    /// Relative violation above which a gray cell counts as clearly failed.
    #[serde(default = "default_gray")]
    pub gray_threshold: f64,
    /// Run spectral clustering and report accuracy.
    #[serde(default)]
    pub cluster: bool,
    #[serde(default)]
    pub keep_coefficients: bool,
}

/// `points` values from `lo` to `hi`, evenly spaced in log scale.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut v: Vec<f64> = (0..points)
                .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
                .collect();
            v[0] = lo;
            v[points - 1] = hi;
            v
        }
    }
}

impl ExperimentGrid {
    pub fn new(base: GridBase, axis2: Axis2) -> Self {
        Self {
            base,
            axis2,
            lambdas: None,
            lambda_points: default_points(),
            seeds: default_seeds(),
            master_seed: 0,
            mode: SolveMode::default(),
            support_eps_rel: default_eps(),
            gray_threshold: default_gray(),
            cluster: false,
            keep_coefficients: false,
        }
    }

    pub fn lambda_axis(&self) -> Vec<f64> {
        self.lambdas.clone().unwrap_or_else(|| {
            let s = (self.base.n as f64).sqrt();
            log_space(s * 1e-2, s * 1e3, self.lambda_points)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SscError::InvalidSpec(m.to_string()));
        if self.axis2.is_empty() {
            return bad("second axis is empty");
        }
        let lambdas = self.lambda_axis();
        if lambdas.is_empty() {
            return bad("lambda axis is empty");
        }
        if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return bad("lambdas must be positive and finite");
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1");
        }
        if !(self.support_eps_rel >= 0.0) {
            return bad("support_eps_rel must be non-negative");
        }
        for a in 0..self.axis2.len() {
            self.model_spec(a).validate()?;
        }
        Ok(())
    }

    /// Model spec of the cells at second-axis index `a`.
    pub fn model_spec(&self, a: usize) -> ModelSpec {
        let b = &self.base;
        let (mut d, mut l, mut sigma) = (b.d, b.l, b.sigma);
        match &self.axis2 {
            Axis2::Sigma(v) => sigma = v[a],
            Axis2::D(v) => d = v[a],
            Axis2::L(v) => l = v[a],
        }
        let noise = if sigma == 0.0 {
            Noise::None
        } else {
            Noise::Gaussian { sigma }
        };
        let mut spec = ModelSpec::uniform(b.model, b.n, d, l, b.kappa, noise);
        spec.normalize_noisy = b.normalize_noisy;
        spec
    }

    pub fn strip_rng(&self, a: usize, seed: usize) -> RngSpec {
        RngSpec::new(self.master_seed)
            .child(a as u64)
            .child(seed as u64)
    }

    /// The dataset every cell of strip `(a, seed)` is solved on.
    pub fn strip_dataset(&self, a: usize, seed: usize) -> Result<LabeledDataset> {
        generate(&self.model_spec(a), &self.strip_rng(a, seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCellResult {
    pub model: Model,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub kappa: f64,
    pub axis2: String,
    pub axis2_index: usize,
    pub sigma_or_axis2: f64,
    pub lambda_index: usize,
    pub lambda: f64,
    pub seed: usize,
    pub verdict: Verdict,
    /// Empty when no coefficient mass lies inside the ground-truth mask.
    pub rel_violation: Option<f64>,
    /// Empty unless clustering was requested.
    pub accuracy: Option<f64>,
    pub trivial_columns: usize,
    pub iterations: usize,
    pub status: SolveStatus,
    #[serde(skip)]
    pub runtime_ms: u64,
}

impl GridCellResult {
    pub fn key(&self) -> (usize, usize, usize) {
        (self.axis2_index, self.seed, self.lambda_index)
    }
}

#[derive(Debug, Serialize)]
struct TimingRow {
    axis2_index: usize,
    seed: usize,
    lambda_index: usize,
    runtime_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PartialStrip {
    cells: Vec<GridCellResult>,
    runtimes_ms: Vec<u64>,
}

fn strip_path(dir: &Path, a: usize, seed: usize) -> PathBuf {
    dir.join("partial").join(format!("strip-a{a}-s{seed}.json"))
}

pub fn coefficient_path(dir: &Path, a: usize, seed: usize, lambda_index: usize) -> PathBuf {
    dir.join("coefficients")
        .join(format!("C-a{a}-s{seed}-l{lambda_index}.csv"))
}

fn run_strip(
    grid: &ExperimentGrid,
    a: usize,
    seed: usize,
    out: Option<&Path>,
) -> Result<Vec<GridCellResult>> {
    let spec = grid.model_spec(a);
    let dataset = grid.strip_dataset(a, seed)?;
    let k = dataset.num_subspaces();
    let mut warm = None;
    let mut cells = Vec::new();
    for (li, &lambda) in grid.lambda_axis().iter().enumerate() {
        let start = Instant::now();
        let cfg = SolveConfig::new(lambda).with_mode(grid.mode);
        let sol = solve(&dataset.data, &cfg, warm.as_ref())?;
        let c = &sol.coefficients;
        let (rel, sep, accuracy) = if grid.cluster && k >= 2 {
            let res = evaluate(
                c,
                &dataset.labels,
                k,
                grid.support_eps_rel,
                Some(lambda),
                &grid.strip_rng(a, seed).child(li as u64),
            )?;
            (
                res.rel_violation,
                (res.trivial_columns, res.sep_holds),
                Some(res.accuracy),
            )
        } else {
            let s = check_sep_and_trivial(c, &dataset.labels, grid.support_eps_rel)?;
            let rel = match rel_violation(c, &dataset.labels, grid.support_eps_rel) {
                Ok(v) => Some(v),
                Err(SscError::AllZeroMass) => None,
                Err(e) => return Err(e),
            };
            (rel, (s.trivial_columns, s.sep_holds), None)
        };
        if grid.keep_coefficients {
            if let Some(dir) = out {
                let path = coefficient_path(dir, a, seed, li);
                fs::create_dir_all(path.parent().expect("coefficient dir"))
                    .map_err(|e| SscError::io(&path, e))?;
                write_coefficients(&path, c)?;
            }
        }
        cells.push(GridCellResult {
            model: spec.model,
            n: spec.n,
            d: spec.dims[0],
            l: spec.dims.len(),
            kappa: grid.base.kappa,
            axis2: grid.axis2.name().to_string(),
            axis2_index: a,
            sigma_or_axis2: grid.axis2.value(a),
            lambda_index: li,
            lambda,
            seed,
            verdict: Verdict::classify(sep.0, rel),
            rel_violation: rel,
            accuracy,
            trivial_columns: sep.0,
            iterations: sol.iterations,
            status: sol.status,
            runtime_ms: start.elapsed().as_millis() as u64,
        });
        warm = Some(sol.coefficients);
    }
    Ok(cells)
}

/// Worker count: the request, capped by `SSC_THREADS` when set.
pub fn effective_workers(requested: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v > 0);
    let n = requested.max(1);
    cap.map_or(n, |c| n.min(c))
}

fn load_partial(dir: &Path, a: usize, seed: usize) -> Option<Vec<GridCellResult>> {
    let strip: PartialStrip = read_json(&strip_path(dir, a, seed)).ok()?;
    let mut cells = strip.cells;
    for (c, t) in cells.iter_mut().zip(strip.runtimes_ms) {
        c.runtime_ms = t;
    }
    Some(cells)
}

/// Runs every strip and returns the cells sorted by (axis, seed, lambda).
/// With `out`, finished strips are saved as they complete and reused by a
/// rerun on the same directory with the same grid.
pub fn run_grid(
    grid: &ExperimentGrid,
    workers: usize,
    out: Option<&Path>,
) -> Result<Vec<GridCellResult>> {
    grid.validate()?;
    let mut resume = false;
    if let Some(dir) = out {
        fs::create_dir_all(dir.join("partial")).map_err(|e| SscError::io(dir, e))?;
        let marker = dir.join(MARKER);
        resume = read_json::<ExperimentGrid>(&marker).is_ok_and(|g| &g == grid);
        if !resume {
            let _ = fs::remove_dir_all(dir.join("partial"));
            fs::create_dir_all(dir.join("partial")).map_err(|e| SscError::io(dir, e))?;
        }
        write_json(&marker, grid)?;
    }
    let strips: Vec<(usize, usize)> = (0..grid.axis2.len())
        .flat_map(|a| (0..grid.seeds).map(move |s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(workers))
        .build()
        .map_err(|e| SscError::InvalidInput(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<GridCellResult>>> = pool.install(|| {
        strips
            .par_iter()
            .map(|&(a, s)| {
                if let (true, Some(dir)) = (resume, out) {
                    if let Some(cells) = load_partial(dir, a, s) {
                        return Ok(cells);
                    }
                }
                let cells = run_strip(grid, a, s, out)?;
                if let Some(dir) = out {
                    let strip = PartialStrip {
                        runtimes_ms: cells.iter().map(|c| c.runtime_ms).collect(),
                        cells: cells.clone(),
                    };
                    write_json(&strip_path(dir, a, s), &strip)?;
                }
                Ok(cells)
            })
            .collect()
    });
    let mut cells = Vec::new();
    for r in results {
        cells.extend(r?);
    }
    cells.sort_by_key(GridCellResult::key);
    if let Some(dir) = out {
        write_results(dir, &cells)?;
        let _ = fs::remove_dir_all(dir.join("partial"));
        let _ = fs::remove_file(dir.join(MARKER));
    }
    Ok(cells)
}

fn csv_err(path: &Path, e: csv::Error) -> SscError {
    SscError::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// `results.csv` (deterministic) and `timings.csv` (wall-clock runtimes).
pub fn write_results(dir: &Path, cells: &[GridCellResult]) -> Result<()> {
    let path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    for c in cells {
        w.serialize(c).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| SscError::io(&path, e))?;

    let path = dir.join("timings.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    for c in cells {
        let row = TimingRow {
            axis2_index: c.axis2_index,
            seed: c.seed,
            lambda_index: c.lambda_index,
            runtime_ms: c.runtime_ms,
        };
        w.serialize(row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| SscError::io(&path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<GridCellResult>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_err(path, e)))
        .collect()
}

/// Lambda indices of the longest run of consecutive white cells.
pub fn white_band(strip: &[GridCellResult]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, c) in strip.iter().enumerate() {
        if c.verdict == Verdict::White {
            let s = *start.get_or_insert(i);
            if best.is_none_or(|(lo, hi)| i - s > hi - lo) {
                best = Some((s, i));
            }
        } else {
            start = None;
        }
    }
    best.map(|(lo, hi)| (strip[lo].lambda_index, strip[hi].lambda_index))
}

/// Cells of strip `(a, seed)` in lambda order.
pub fn strip_cells(cells: &[GridCellResult], a: usize, seed: usize) -> Vec<GridCellResult> {
    let mut out: Vec<GridCellResult> = cells
        .iter()
        .filter(|c| c.axis2_index == a && c.seed == seed)
        .cloned()
        .collect();
    out.sort_by_key(|c| c.lambda_index);
    out
}
