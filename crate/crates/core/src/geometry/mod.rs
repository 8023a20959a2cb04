//! Geometric quantities of a labeled dataset: inradius of each subspace's
//! samples, projected incoherence, subspace affinity and noise magnitude.

mod incoherence;
mod inradius;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Result, SscError};
use crate::rng::RngSpec;
use crate::solver::SolveConfig;

pub use incoherence::{
    projected_dual_direction, subspace_incoherence, IncoherenceReport, DEGENERATE_DUAL_TOL,
};
pub use inradius::{
    circumradius_polar, estimate_inradius, leave_one_out_inradius, InradiusConfig, InradiusMethod,
    SPAN_TOL,
};

/// `||U_k^T U_l||_F`, the root sum of squared cosines of the canonical angles.
pub fn subspace_affinity(u_k: &DMatrix<f64>, u_l: &DMatrix<f64>) -> Result<f64> {
    if u_k.nrows() != u_l.nrows() {
        return Err(SscError::DimensionMismatch(format!(
            "bases live in R^{} and R^{}",
            u_k.nrows(),
            u_l.nrows()
        )));
    }
    Ok(u_k.tr_mul(u_l).norm())
}

/// Cosines of the canonical angles between two subspaces, descending.
pub fn canonical_cosines(u_k: &DMatrix<f64>, u_l: &DMatrix<f64>) -> Result<Vec<f64>> {
    if u_k.nrows() != u_l.nrows() {
        return Err(SscError::DimensionMismatch(
            "bases differ in ambient dimension".into(),
        ));
    }
    let mut s: Vec<f64> = u_k.tr_mul(u_l).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `(delta, delta1)`: the largest noise norm `||x_i - y_i||` and the largest
/// projection of a noise vector onto any of the subspaces.
pub fn noise_magnitudes(dataset: &LabeledDataset) -> Result<(f64, f64)> {
    let y = dataset.clean.as_ref().ok_or(SscError::MissingCleanData)?;
    let ensemble = dataset
        .ensemble
        .as_ref()
        .ok_or(SscError::MissingCleanData)?;
    let z = dataset.data.values() - y.values();
    let mut delta: f64 = 0.0;
    let mut delta1: f64 = 0.0;
    for col in z.column_iter() {
        delta = delta.max(col.norm());
        for u in ensemble.bases() {
            delta1 = delta1.max(u.tr_mul(&col).norm());
        }
    }
    Ok((delta, delta1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseConfig {
    #[serde(default)]
    pub inradius: InradiusConfig,
    /// Solver settings for the dual directions; `lambda` is the one the
    /// incoherence is evaluated at.
    pub solve: SolveConfig,
    #[serde(default)]
    pub rng: RngSpec,
}

impl DiagnoseConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            inradius: InradiusConfig::default(),
            solve: SolveConfig::new(lambda),
            rng: RngSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub lambda: f64,
    /// `r_l = min_i r(conv(±Y_{-i}^{(l)}))`.
    pub r: Vec<f64>,
    pub r_min: f64,
    pub mu: Vec<f64>,
    /// Absent without clean data.
    pub delta: Option<f64>,
    pub delta1: Option<f64>,
    pub affinity: Vec<Vec<f64>>,
    pub skipped_columns: Vec<usize>,
    pub dims: Vec<usize>,
    /// The inradius search returns upper bounds.
    pub inradius_upper_bound: bool,
    /// Inradius and incoherence were computed from noisy samples.
    pub proxy: bool,
}

impl GeometryReport {
    /// `mu_l < r_l` for every subspace.
    pub fn separated(&self) -> bool {
        self.r.iter().zip(&self.mu).all(|(r, m)| m < r)
    }
}

/// Points used for the inradius of subspace `l`: clean samples, or noisy
/// samples projected onto the subspace and renormalized.
fn inradius_points(dataset: &LabeledDataset, l: usize) -> Result<(DMatrix<f64>, bool)> {
    let members = dataset.members(l);
    let ensemble = dataset
        .ensemble
        .as_ref()
        .ok_or(SscError::MissingCleanData)?;
    match &dataset.clean {
        Some(y) => Ok((y.select_columns(&members), false)),
        None => {
            let u = ensemble.basis(l);
            let mut p = u * u.tr_mul(&dataset.data.select_columns(&members));
            for mut col in p.column_iter_mut() {
                let n = col.norm();
                if n > 0.0 {
                    col /= n;
                }
            }
            Ok((p, true))
        }
    }
}

pub fn diagnose(dataset: &LabeledDataset, cfg: &DiagnoseConfig) -> Result<GeometryReport> {
    let ensemble = dataset.ensemble.as_ref().ok_or_else(|| {
        SscError::InvalidInput("subspace bases are required for diagnostics".into())
    })?;
    let l_count = ensemble.len();
    let mut r = Vec::with_capacity(l_count);
    let mut proxy = dataset.clean.is_none();
    for l in 0..l_count {
        let (points, is_proxy) = inradius_points(dataset, l)?;
        proxy |= is_proxy;
        let loo = leave_one_out_inradius(
            &points,
            ensemble.basis(l),
            &cfg.inradius,
            &cfg.rng.child(l as u64),
        )?;
        r.push(loo.into_iter().fold(f64::INFINITY, f64::min));
    }
    let inc = subspace_incoherence(dataset, cfg.solve.lambda, &cfg.solve)?;
    let (delta, delta1) = match noise_magnitudes(dataset) {
        Ok((a, b)) => (Some(a), Some(b)),
        Err(SscError::MissingCleanData) => (None, None),
        Err(e) => return Err(e),
    };
    let mut affinity = vec![vec![0.0; l_count]; l_count];
    for k in 0..l_count {
        for l in 0..l_count {
            affinity[k][l] = subspace_affinity(ensemble.basis(k), ensemble.basis(l))?;
        }
    }
    Ok(GeometryReport {
        lambda: cfg.solve.lambda,
        r_min: r.iter().copied().fold(f64::INFINITY, f64::min),
        r,
        mu: inc.mu,
        delta,
        delta1,
        affinity,
        skipped_columns: inc.skipped_columns,
        dims: ensemble.dims(),
        inradius_upper_bound: true,
        proxy: proxy || inc.proxy,
    })
}
