//! Shared data model and small numeric helpers.
//!
//! Samples are columns throughout: a data matrix is `n x N` with one sample
//! per column.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SscError};

/// Columns with norm at or below this are treated as zero.
pub const ZERO_COLUMN_EPS: f64 = 1e-12;
/// Maximum entry of `U^T U - I` accepted for an orthonormal basis.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        return Err(SscError::NonFinite(format!(
            "{what} entry ({}, {})",
            pos % m.nrows(),
            pos / m.nrows()
        )));
    }
    Ok(())
}

/// Ambient-space sample matrix, `n x N`, column `j` is sample `x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 1 || values.ncols() < 2 {
            return Err(SscError::InvalidInput(format!(
                "data matrix must be at least 1 x 2, got {} x {}",
                values.nrows(),
                values.ncols()
            )));
        }
        check_finite(&values, "data")?;
        Ok(Self { values })
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.values.column(j).into_owned()
    }

    /// Sub-matrix made of the given columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> DMatrix<f64> {
        self.values.select_columns(idx)
    }
}

/// Orthonormal bases `U_l` of the ground-truth subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEnsemble {
    bases: Vec<DMatrix<f64>>,
}

impl SubspaceEnsemble {
    pub fn new(bases: Vec<DMatrix<f64>>) -> Result<Self> {
        if bases.is_empty() {
            return Err(SscError::InvalidInput("ensemble has no subspaces".into()));
        }
        let n = bases[0].nrows();
        for (l, u) in bases.iter().enumerate() {
            if u.nrows() != n {
                return Err(SscError::DimensionMismatch(format!(
                    "basis {l} has {} rows, expected {n}",
                    u.nrows()
                )));
            }
            let d = u.ncols();
            if d < 1 || d >= n {
                return Err(SscError::InvalidInput(format!(
                    "basis {l} has dimension {d}; need 1 <= d < n = {n}"
                )));
            }
            check_finite(u, "basis")?;
            let err = orthonormality_error(u);
            if err > ORTHONORMAL_TOL {
                return Err(SscError::InvalidInput(format!(
                    "basis {l} is not orthonormal (max |U^T U - I| = {err:e})"
                )));
            }
        }
        Ok(Self { bases })
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.bases[0].nrows()
    }

    pub fn basis(&self, l: usize) -> &DMatrix<f64> {
        &self.bases[l]
    }

    pub fn bases(&self) -> &[DMatrix<f64>] {
        &self.bases
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|u| u.ncols()).collect()
    }
}

/// Data with ground-truth labels and, for synthetic data, the clean signal
/// and the generating subspaces.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub labels: Vec<usize>,
    pub clean: Option<DataMatrix>,
    pub ensemble: Option<SubspaceEnsemble>,
    num_subspaces: usize,
}

impl LabeledDataset {
    pub fn new(
        data: DataMatrix,
        labels: Vec<usize>,
        clean: Option<DataMatrix>,
        ensemble: Option<SubspaceEnsemble>,
    ) -> Result<Self> {
        if labels.len() != data.len() {
            return Err(SscError::DimensionMismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                data.len()
            )));
        }
        let num_subspaces = match &ensemble {
            Some(e) => e.len(),
            None => labels.iter().max().map_or(0, |m| m + 1),
        };
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_subspaces) {
            return Err(SscError::LabelRangeMismatch {
                label: bad,
                classes: num_subspaces,
            });
        }
        if let Some(y) = &clean {
            if y.n() != data.n() || y.len() != data.len() {
                return Err(SscError::DimensionMismatch(
                    "clean data shape differs from noisy data".into(),
                ));
            }
        }
        if let Some(e) = &ensemble {
            if e.ambient_dim() != data.n() {
                return Err(SscError::DimensionMismatch(
                    "ensemble ambient dimension differs from data".into(),
                ));
            }
        }
        Ok(Self {
            data,
            labels,
            clean,
            ensemble,
            num_subspaces,
        })
    }

    /// Number of subspaces `L`.
    pub fn num_subspaces(&self) -> usize {
        self.num_subspaces
    }

    /// Column indices belonging to subspace `l`, in order.
    pub fn members(&self, l: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &lab)| (lab == l).then_some(i))
            .collect()
    }

    /// `N_l` for every subspace.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_subspaces];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Self-expression matrix `C` (`N x N`, zero diagonal); column `i` is `c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    values: DMatrix<f64>,
}

impl CoefficientMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(SscError::DimensionMismatch(format!(
                "coefficient matrix must be square, got {} x {}",
                values.nrows(),
                values.ncols()
            )));
        }
        check_finite(&values, "coefficient")?;
        if let Some(i) = (0..values.nrows()).find(|&i| values[(i, i)] != 0.0) {
            return Err(SscError::InvalidInput(format!(
                "coefficient matrix has nonzero diagonal at {i}"
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: DMatrix::zeros(n, n),
        }
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(m: &DataMatrix) -> Result<DataMatrix> {
    let mut values = m.values.clone();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm <= ZERO_COLUMN_EPS {
            return Err(SscError::ZeroColumn { index: j, norm });
        }
        col /= norm;
    }
    Ok(DataMatrix { values })
}

/// Orthogonal projection `U U^T v` onto the span of an orthonormal basis.
pub fn project_onto(u_basis: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    if u_basis.nrows() != v.len() {
        return Err(SscError::DimensionMismatch(format!(
            "basis has {} rows, vector has length {}",
            u_basis.nrows(),
            v.len()
        )));
    }
    let coords = u_basis.tr_mul(v);
    Ok(u_basis * coords)
}

/// `sign(x) * max(|x| - t, 0)`.
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `max |U^T U - I|`.
pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let gram = u.tr_mul(u);
    let mut err: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((gram[(i, j)] - target).abs());
        }
    }
    err
}

/// Orthonormalizes the columns with two passes of modified Gram–Schmidt.
pub fn orthonormalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut q = m.clone();
    let cols = q.ncols();
    for _pass in 0..2 {
        for j in 0..cols {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).into_owned();
                q.column_mut(j).axpy(-proj, &qk, 1.0);
            }
            let norm = q.column(j).norm();
            if norm <= ZERO_COLUMN_EPS {
                return Err(SscError::RankDeficient(norm));
            }
            q.column_mut(j).unscale_mut(norm);
        }
    }
    Ok(q)
}
