//! Inradius of the symmetric hull `conv(±Y)` inside a subspace.
//!
//! The inradius equals `min ||Y^T w||_inf` over unit `w` in the span. That
//! minimum is searched over a direction set (a dense angle grid in 2-D,
//! random directions otherwise) and then refined locally. Every evaluated
//! direction gives a valid upper bound, so the estimate is one-sided.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};
use crate::rng::RngSpec;

/// Tolerance for points lying in the span of the basis.
pub const SPAN_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-12;
const GOLDEN_STEPS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InradiusMethod {
    /// Angle grid for `d = 2`, sampled directions otherwise.
    #[default]
    Auto,
    AngleGrid,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InradiusConfig {
    /// Random directions for the sampled search.
    pub budget: usize,
    /// Angles in `[0, pi)` for the 2-D grid.
    pub grid: usize,
    /// Coordinate-search steps after the sampled search.
    pub refine_steps: usize,
    pub method: InradiusMethod,
}

impl Default for InradiusConfig {
    fn default() -> Self {
        Self {
            budget: 20_000,
            grid: 100_000,
            refine_steps: 50,
            method: InradiusMethod::Auto,
        }
    }
}

impl InradiusConfig {
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }
}

/// Coordinates `U^T Y` of points that lie in `span(U)`.
fn coordinates(points: &DMatrix<f64>, basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if points.nrows() != basis.nrows() {
        return Err(SscError::DimensionMismatch(format!(
            "points have {} rows, basis has {}",
            points.nrows(),
            basis.nrows()
        )));
    }
    if basis.ncols() == 0 || points.ncols() == 0 {
        return Err(SscError::InvalidInput("empty basis or point set".into()));
    }
    let coords = basis.tr_mul(points);
    let resid = points - basis * &coords;
    for (j, col) in resid.column_iter().enumerate() {
        let scale = points.column(j).norm().max(1.0);
        if col.norm() > SPAN_TOL * scale {
            return Err(SscError::OutOfSpan(col.norm()));
        }
    }
    Ok(coords)
}

/// Smallest singular value of `P` relative to the largest.
fn relative_rank_gap(p: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(p * p.transpose());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 {
        0.0
    } else {
        (min.max(0.0) / max).sqrt()
    }
}

/// `max_j |p_j^T w|` together with the runner-up, for leave-one-out.
#[derive(Debug, Clone, Copy)]
struct Top2 {
    first: f64,
    arg: usize,
    second: f64,
}

impl Top2 {
    fn of(p: &DMatrix<f64>, w: &[f64]) -> Self {
        let mut t = Top2 {
            first: f64::NEG_INFINITY,
            arg: usize::MAX,
            second: f64::NEG_INFINITY,
        };
        for (j, col) in p.column_iter().enumerate() {
            let v = col.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().abs();
            if v > t.first {
                t.second = t.first;
                t.first = v;
                t.arg = j;
            } else if v > t.second {
                t.second = v;
            }
        }
        t
    }

    fn without(&self, i: Option<usize>) -> f64 {
        if i == Some(self.arg) {
            self.second
        } else {
            self.first
        }
    }
}

/// `max_{j != skip} |p_j^T w|`.
fn support_value(p: &DMatrix<f64>, w: &[f64], skip: Option<usize>) -> f64 {
    p.column_iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != skip)
        .map(|(_, col)| col.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

fn angle_dir(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

fn golden_refine(
    p: &DMatrix<f64>,
    skip: Option<usize>,
    center: f64,
    half_width: f64,
    start: f64,
) -> f64 {
    let f = |t: f64| support_value(p, &angle_dir(t), skip);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (center - half_width, center + half_width);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best = start.min(f1).min(f2);
    for _ in 0..GOLDEN_STEPS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            best = best.min(f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            best = best.min(f2);
        }
    }
    best
}

fn coordinate_refine(p: &DMatrix<f64>, skip: Option<usize>, start: &[f64], steps: usize) -> f64 {
    let d = start.len();
    let mut w = start.to_vec();
    let mut best = support_value(p, &w, skip);
    let mut h = 0.1;
    let mut trial = vec![0.0; d];
    for _ in 0..steps {
        let mut improved: Option<(Vec<f64>, f64)> = None;
        for k in 0..d {
            for s in [-1.0, 1.0] {
                trial.copy_from_slice(&w);
                trial[k] += s * h;
                let norm = trial.iter().map(|v| v * v).sum::<f64>().sqrt();
                trial.iter_mut().for_each(|v| *v /= norm);
                let v = support_value(p, &trial, skip);
                if v < improved.as_ref().map_or(best, |(_, b)| *b) {
                    improved = Some((trial.clone(), v));
                }
            }
        }
        match improved {
            Some((nw, v)) => {
                w = nw;
                best = v;
            }
            None => h /= 2.0,
        }
    }
    best
}

/// Estimates for the full point set (`None`) and each leave-one-out set.
fn estimate_many(
    p: &DMatrix<f64>,
    skips: &[Option<usize>],
    cfg: &InradiusConfig,
    rng: &RngSpec,
) -> Vec<f64> {
    let d = p.nrows();
    if d == 1 {
        let t = Top2::of(p, &[1.0]);
        return skips.iter().map(|&s| t.without(s).max(0.0)).collect();
    }
    let method = match cfg.method {
        InradiusMethod::Auto if d == 2 => InradiusMethod::AngleGrid,
        InradiusMethod::Auto => InradiusMethod::Sampled,
        m => m,
    };
    let mut best: Vec<(f64, Vec<f64>)> = vec![(f64::INFINITY, Vec::new()); skips.len()];
    let mut record = |w: Vec<f64>, t: Top2| {
        for (slot, &s) in best.iter_mut().zip(skips) {
            let v = t.without(s);
            if v < slot.0 {
                *slot = (v, w.clone());
            }
        }
    };
    match method {
        InradiusMethod::AngleGrid if d == 2 => {
            let grid = cfg.grid.max(1);
            for k in 0..grid {
                let theta = std::f64::consts::PI * k as f64 / grid as f64;
                let w = angle_dir(theta);
                let t = Top2::of(p, &w);
                record(vec![theta], t);
            }
            let half = std::f64::consts::PI / grid as f64;
            best.iter()
                .zip(skips)
                .map(|((v, theta), &s)| golden_refine(p, s, theta[0], half, *v))
                .collect()
        }
        _ => {
            let mut r = rng.rng();
            for _ in 0..cfg.budget.max(1) {
                let w = r.unit_vector(d);
                let t = Top2::of(p, &w);
                record(w, t);
            }
            best.iter()
                .zip(skips)
                .map(|((v, w), &s)| v.min(coordinate_refine(p, s, w, cfg.refine_steps)))
                .collect()
        }
    }
}

/// `min ||Y^T w||_inf` over unit `w` in `span(basis)`; an upper bound on the
/// inradius of `conv(±Y)` that tightens as the search budget grows.
pub fn estimate_inradius(
    points: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    cfg: &InradiusConfig,
    rng: &RngSpec,
) -> Result<f64> {
    let p = coordinates(points, basis)?;
    let gap = relative_rank_gap(&p);
    if p.ncols() < p.nrows() || gap <= RANK_TOL {
        return Err(SscError::RankDeficient(gap));
    }
    Ok(estimate_many(&p, &[None], cfg, rng)[0])
}

/// `r(conv(±Y_{-i}))` for every column `i`. A leave-one-out set that no
/// longer spans the subspace has inradius 0.
pub fn leave_one_out_inradius(
    points: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    cfg: &InradiusConfig,
    rng: &RngSpec,
) -> Result<Vec<f64>> {
    let p = coordinates(points, basis)?;
    let m = p.ncols();
    let d = p.nrows();
    let mut spans = vec![false; m];
    let mut skips = Vec::new();
    for (i, spans_i) in spans.iter_mut().enumerate() {
        if m > d {
            let keep: Vec<usize> = (0..m).filter(|&j| j != i).collect();
            *spans_i = relative_rank_gap(&p.select_columns(&keep)) > RANK_TOL;
        }
        if *spans_i {
            skips.push(Some(i));
        }
    }
    let estimates = estimate_many(&p, &skips, cfg, rng);
    let mut out = vec![0.0; m];
    for (s, v) in skips.iter().zip(estimates) {
        out[s.expect("leave-one-out index")] = v;
    }
    Ok(out)
}

/// Circumradius of the polar set, through `r(P) R(P°) = 1`.
pub fn circumradius_polar(
    points: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    cfg: &InradiusConfig,
    rng: &RngSpec,
) -> Result<f64> {
    Ok(1.0 / estimate_inradius(points, basis, cfg, rng)?)
}
