//! Spectral clustering of the self-expression graph and the success
//! metrics of a coefficient matrix.

mod eigen;
mod kmeans;
mod metrics;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::CoefficientMatrix;
use crate::error::{Result, SscError};
use crate::rng::RngSpec;

pub use eigen::{jacobi_eigen, symmetric_eigen, Eigen, JACOBI_MAX_DIM, JACOBI_TOL};
pub use kmeans::kmeans;
pub use metrics::{
    check_sep_and_trivial, clean_coefficients, clustering_accuracy, rel_violation, SepCheck,
    Verdict, GRAY_THRESHOLD,
};

/// Degree floor for isolated vertices.
pub const DEGREE_EPS: f64 = 1e-12;

/// `W = |C| + |C|^T`: symmetric, non-negative, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    w: DMatrix<f64>,
}

impl AffinityGraph {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        if w.ncols() != n {
            return Err(SscError::DimensionMismatch(
                "affinity must be square".into(),
            ));
        }
        for j in 0..n {
            for i in 0..n {
                let v = w[(i, j)];
                if !(v >= 0.0 && v.is_finite()) || v != w[(j, i)] || (i == j && v != 0.0) {
                    return Err(SscError::InvalidInput(format!(
                        "affinity must be symmetric, finite, non-negative with zero diagonal (entry {i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { w })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.nrows() == 0
    }

    /// No edges at all.
    pub fn is_degenerate(&self) -> bool {
        self.w.iter().all(|&v| v == 0.0)
    }

    /// `I - D^{-1/2} W D^{-1/2}` with degrees floored at [`DEGREE_EPS`].
    pub fn normalized_laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        let inv_sqrt: Vec<f64> = self
            .w
            .column_iter()
            .map(|c| 1.0 / c.sum().max(DEGREE_EPS).sqrt())
            .collect();
        DMatrix::from_fn(n, n, |i, j| {
            let off = -self.w[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            if i == j {
                1.0 + off
            } else {
                off
            }
        })
    }
}

pub fn build_affinity(c: &CoefficientMatrix) -> AffinityGraph {
    let a = c.values().abs();
    AffinityGraph {
        w: &a + a.transpose(),
    }
}

/// Normalized spectral clustering: the `k` eigenvectors of the normalized
/// Laplacian with the smallest eigenvalues, rows scaled to unit length, then
/// seeded k-means.
pub fn spectral_cluster(w: &AffinityGraph, k: usize, rng: &RngSpec) -> Result<Vec<usize>> {
    let n = w.len();
    if k < 2 || n < k {
        return Err(SscError::InvalidInput(format!(
            "need 2 <= L <= N, got L = {k}, N = {n}"
        )));
    }
    let eig = symmetric_eigen(&w.normalized_laplacian())?;
    let mut emb = eig.vectors.columns(0, k).into_owned();
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(kmeans(&emb, k, rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub accuracy: f64,
    /// `None` when no coefficient mass lies inside the ground-truth mask.
    pub rel_violation: Option<f64>,
    pub sep_holds: bool,
    pub trivial_columns: usize,
    pub verdict: Verdict,
    /// The affinity graph had no edges; the assignment is arbitrary.
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub seed: u64,
}

/// Clusters `c` into `k` groups and scores it against `truth`. Entries at or
/// below `eps_rel * max(1, ||c_i||_inf)` are treated as zero.
pub fn evaluate(
    c: &CoefficientMatrix,
    truth: &[usize],
    k: usize,
    eps_rel: f64,
    lambda: Option<f64>,
    rng: &RngSpec,
) -> Result<ClusterResult> {
    let cleaned = clean_coefficients(c, eps_rel);
    let graph = build_affinity(&cleaned);
    let assignments = spectral_cluster(&graph, k, rng)?;
    let accuracy = clustering_accuracy(&assignments, truth, k)?;
    let sep = check_sep_and_trivial(c, truth, eps_rel)?;
    let rel = match rel_violation(c, truth, eps_rel) {
        Ok(v) => Some(v),
        Err(SscError::AllZeroMass) => None,
        Err(e) => return Err(e),
    };
    Ok(ClusterResult {
        assignments,
        accuracy,
        rel_violation: rel,
        sep_holds: sep.sep_holds,
        trivial_columns: sep.trivial_columns,
        verdict: Verdict::classify(sep.trivial_columns, rel),
        degenerate: graph.is_degenerate(),
        lambda,
        seed: rng.master_seed,
    })
}
