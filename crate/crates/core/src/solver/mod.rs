//! ADMM solvers for the self-expression LASSO, column by column or as one
//! matrix program, plus the dual certificate used to verify their output.

mod active_set;
mod admm;
mod certificate;
mod ridge;

use serde::{Deserialize, Serialize};

use crate::data::CoefficientMatrix;
use crate::error::{Result, SscError};

pub use admm::{matrix_objective, solve, solve_column, solve_columns, solve_matrix, ColumnSolver};
pub use certificate::{
    column_objective, kkt_residual, min_nontrivial_lambda, recover_dual, support_eps,
    verify_certificate, CertificateReport, Dictionary, DualCertificate, SUPPORT_EPS_REL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// One LASSO per column against `X_{-i}`.
    Column,
    /// The joint program with `diag(C) = 0`.
    #[default]
    Matrix,
}

fn default_rho() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    2000
}
fn default_true() -> bool {
    true
}
fn default_certify_every() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub lambda: f64,
    /// Initial ADMM penalty; `None` means `mu0 = lambda`.
    #[serde(default)]
    pub mu0: Option<f64>,
    /// Penalty growth per iteration. Any value above 1 forces a
    /// refactorization at every iteration.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_tol")]
    pub tol_primal: f64,
    #[serde(default = "default_tol")]
    pub tol_dual: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub mode: SolveMode,
    /// Periodically polish the iterate on its support and stop once the
    /// optimality conditions hold.
    #[serde(default = "default_true")]
    pub certify: bool,
    #[serde(default = "default_certify_every")]
    pub certify_every: usize,
}

impl SolveConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            mu0: None,
            rho: default_rho(),
            tol_primal: default_tol(),
            tol_dual: default_tol(),
            max_iter: default_max_iter(),
            mode: SolveMode::default(),
            certify: true,
            certify_every: default_certify_every(),
        }
    }

    pub fn with_mode(mut self, mode: SolveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mu(&self) -> f64 {
        self.mu0.unwrap_or(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(SscError::InvalidInput(what.to_string()));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive and finite");
        }
        if !(self.mu() > 0.0 && self.mu().is_finite()) {
            return bad("mu0 must be positive and finite");
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return bad("rho must be >= 1");
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 || self.certify_every == 0 {
            return bad("max_iter and certify_every must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// The optimality conditions were verified on the returned solution.
    Certified,
    /// Primal and dual residuals fell below tolerance.
    Converged,
    /// Iteration cap reached; the last iterate is returned.
    MaxIterExceeded,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        self != SolveStatus::MaxIterExceeded
    }
}

#[derive(Debug, Clone)]
pub struct ColumnSolution {
    pub coefficients: nalgebra::DVector<f64>,
    /// `x - A c`.
    pub residual: nalgebra::DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct MatrixSolution {
    pub coefficients: CoefficientMatrix,
    pub objective: f64,
    /// Iterations of the matrix program, or the largest per-column count in
    /// column mode.
    pub iterations: usize,
    /// Worst status over the columns.
    pub status: SolveStatus,
    pub certified_columns: usize,
}
