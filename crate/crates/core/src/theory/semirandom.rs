//! Noise tolerance for uniformly sampled points on fixed subspaces.
//!
//! The right-hand side bounds `delta (1 + delta)`. It contains constants
//! (`t` and the exponents in the failure probability) that are not pinned
//! down, so the value is reported as advisory. Per-pair values are kept
//! alongside the literal maximum over pairs and the conservative minimum.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};
use crate::geometry::GeometryReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemirandomParams {
    pub n: usize,
    /// Samples per subspace.
    pub counts: Vec<usize>,
    pub dims: Vec<usize>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub l: usize,
    pub other: usize,
    pub affinity: f64,
    pub k1: f64,
    pub k2: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemirandomAdvisory {
    pub pairs: Vec<PairBound>,
    /// Maximum over ordered pairs.
    pub bound: f64,
    /// Minimum over ordered pairs.
    pub conservative_bound: f64,
    /// `bound > 0`.
    pub feasible: bool,
    /// `delta (1 + delta)` from the report, if the noise level is known.
    pub delta_term: Option<f64>,
    /// `delta_term <= bound`.
    pub satisfied: Option<bool>,
    pub advisory: bool,
}

/// Evaluates the bound from the affinity matrix of `report`.
pub fn semirandom_advisory(
    report: &GeometryReport,
    params: &SemirandomParams,
) -> Result<SemirandomAdvisory> {
    let l_count = params.dims.len();
    if l_count < 2 || params.counts.len() != l_count || report.affinity.len() != l_count {
        return Err(SscError::InvalidInput(
            "need at least two subspaces with matching dims, counts and affinity".into(),
        ));
    }
    if !(params.t > 0.0 && params.t.is_finite()) {
        return Err(SscError::InvalidInput("t must be positive".into()));
    }
    let d_max = params.dims.iter().copied().max().unwrap_or(0);
    if params.dims.contains(&0) || params.n <= d_max {
        return Err(SscError::InvalidInput("need n > max d_l >= 1".into()));
    }
    let kappas: Vec<f64> = params
        .counts
        .iter()
        .zip(&params.dims)
        .map(|(&nl, &dl)| nl as f64 / dl as f64)
        .collect();
    if kappas.iter().any(|&k| k <= 1.0) {
        return Err(SscError::InvalidInput(
            "every kappa_l = N_l / d_l must exceed 1".into(),
        ));
    }
    let big_n: usize = params.counts.iter().sum();
    let log_kappa_over_d = kappas
        .iter()
        .zip(&params.dims)
        .map(|(&k, &d)| k.ln() / d as f64)
        .fold(f64::INFINITY, f64::min);
    let lead =
        ((params.n - d_max) as f64 / (6.0 * (big_n as f64).ln())).sqrt() * log_kappa_over_d.sqrt();

    let mut pairs = Vec::new();
    for l in 0..l_count {
        if report.affinity[l].len() != l_count {
            return Err(SscError::InvalidInput(
                "affinity matrix must be square".into(),
            ));
        }
        let k2 = 4.0 / kappas[l].ln().sqrt();
        let dl = params.dims[l] as f64;
        for other in (0..l_count).filter(|&o| o != l) {
            let aff = report.affinity[l][other];
            let k1 = params.t * (((params.counts[l] + 1) * params.counts[other]) as f64).ln()
                + (l_count as f64).ln();
            let gap = 1.0 - k1 * k2 * aff / (params.dims[other] as f64).sqrt();
            pairs.push(PairBound {
                l,
                other,
                affinity: aff,
                k1,
                k2,
                bound: lead / (40.0 * k2 * dl.sqrt()) * gap,
            });
        }
    }
    let bound = pairs
        .iter()
        .map(|p| p.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let conservative_bound = pairs.iter().map(|p| p.bound).fold(f64::INFINITY, f64::min);
    let delta_term = report.delta.map(|d| d * (1.0 + d));
    Ok(SemirandomAdvisory {
        pairs,
        bound,
        conservative_bound,
        feasible: bound > 0.0,
        delta_term,
        satisfied: delta_term.map(|t| t <= bound),
        advisory: true,
    })
}
