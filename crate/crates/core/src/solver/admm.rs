//! ADMM iterations.
//!
//! Both solvers run the same splitting: an unconstrained copy `J` absorbs the
//! quadratic term, `C` carries the l1 term and the zero-diagonal constraint,
//! and `Lambda` is the multiplier of `J = C - diag(C)`:
//!
//! ```text
//! J  = (lambda X^T X + mu I)^{-1} (lambda X^T X + mu C - Lambda)
//! C' = SoftThresh_{1/mu}(J + Lambda / mu),   C = C' - diag(C')
//! Lambda = Lambda + mu (J - C)
//! mu = rho mu
//! ```
//!
//! The column solver is the same recursion restricted to one column, with
//! the masked entry playing the role of the diagonal.

use nalgebra::{DMatrix, DVector};

use super::active_set::NormalEquations;
use super::certificate::{column_objective, Dictionary};
use super::ridge::RidgeSystem;
use super::{ColumnSolution, MatrixSolution, SolveConfig, SolveMode, SolveStatus};
use crate::data::{soft_threshold, CoefficientMatrix, DataMatrix};
use crate::error::{Result, SscError};

/// The active-set fallback runs on certification attempts 1, 2, 4, 8, ...
fn thorough_check(iteration: usize, every: usize) -> bool {
    (iteration / every).is_power_of_two()
}

/// `||C||_1 + (lambda/2) ||X - X C||_F^2`.
pub fn matrix_objective(x: &DMatrix<f64>, c: &DMatrix<f64>, lambda: f64) -> f64 {
    let resid = x - x * c;
    c.iter().map(|v| v.abs()).sum::<f64>() + 0.5 * lambda * resid.norm_squared()
}

fn ensure_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(SscError::NonFinite(format!("ADMM {what} diverged")))
    }
}

/// Column solves sharing one factorization of `lambda X^T X + mu I`.
pub struct ColumnSolver<'a> {
    matrix: &'a DMatrix<f64>,
    cfg: SolveConfig,
    ridge: RidgeSystem<'a>,
    gram: DMatrix<f64>,
}

impl<'a> ColumnSolver<'a> {
    pub fn new(matrix: &'a DMatrix<f64>, cfg: &SolveConfig) -> Result<Self> {
        cfg.validate()?;
        if matrix.ncols() == 0 {
            return Err(SscError::InvalidInput("dictionary has no columns".into()));
        }
        let ridge = RidgeSystem::new(matrix, cfg.lambda, cfg.mu())?;
        Ok(Self {
            matrix,
            cfg: cfg.clone(),
            ridge,
            gram: matrix.tr_mul(matrix),
        })
    }

    /// Solves `x` against every column of the matrix.
    pub fn solve_vector(
        &self,
        x: &DVector<f64>,
        warm: Option<&DVector<f64>>,
    ) -> Result<ColumnSolution> {
        if x.len() != self.matrix.nrows() {
            return Err(SscError::DimensionMismatch(format!(
                "sample has length {}, dictionary has {} rows",
                x.len(),
                self.matrix.nrows()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(SscError::NonFinite(format!("sample entry {i}")));
        }
        self.run(x, Dictionary::full(self.matrix), warm)
    }

    /// Solves column `i` against `X_{-i}`; the result has `c_i = 0`.
    pub fn solve_masked(&self, i: usize, warm: Option<&DVector<f64>>) -> Result<ColumnSolution> {
        if i >= self.matrix.ncols() {
            return Err(SscError::DimensionMismatch(format!(
                "column {i} out of range for {} columns",
                self.matrix.ncols()
            )));
        }
        if self.matrix.ncols() < 2 {
            return Err(SscError::InvalidInput("X_{-i} is empty".into()));
        }
        let x = self.matrix.column(i).into_owned();
        self.run(&x, Dictionary::masked(self.matrix, i), warm)
    }

    fn run(
        &self,
        x: &DVector<f64>,
        dict: Dictionary<'a>,
        warm: Option<&DVector<f64>>,
    ) -> Result<ColumnSolution> {
        let cfg = &self.cfg;
        let lambda = cfg.lambda;
        let cols = dict.ncols();
        let finish = |c: DVector<f64>, iterations: usize, status: SolveStatus| {
            let residual = x - dict.apply(&c);
            let objective = column_objective(x, &dict, &c, lambda);
            ColumnSolution {
                coefficients: c,
                residual,
                objective,
                iterations,
                status,
            }
        };

        // c = 0 is optimal iff lambda ||A^T x||_inf <= 1
        if dict.correlations(x).amax() * lambda <= 1.0 {
            return Ok(finish(DVector::zeros(cols), 0, SolveStatus::Certified));
        }

        let ax = match dict.excluded() {
            Some(i) => self.gram.column(i).into_owned(),
            None => self.matrix.tr_mul(x),
        };
        let normal = NormalEquations::new(&self.gram, ax.clone(), dict.excluded(), x.len(), lambda);
        let g = ax * lambda;
        let mut c = match warm {
            Some(w) if w.len() == cols => {
                let mut w = w.clone();
                if let Some(i) = dict.excluded() {
                    w[i] = 0.0;
                }
                w
            }
            _ => DVector::zeros(cols),
        };
        // a warm start near the optimum usually certifies without iterating
        if cfg.certify && warm.is_some() {
            if let Some(p) = normal.descend(c.clone(), cfg.tol_dual) {
                return Ok(finish(p, 0, SolveStatus::Certified));
            }
        }
        let mut lam = DVector::<f64>::zeros(cols);
        let mut mu = cfg.mu();
        let mut status = SolveStatus::MaxIterExceeded;
        let mut iterations = cfg.max_iter;

        for k in 0..cfg.max_iter {
            let refactored;
            let sys = if mu == self.ridge.mu() {
                &self.ridge
            } else {
                refactored = RidgeSystem::new(self.matrix, lambda, mu)?;
                &refactored
            };

            let mut rhs = &g - &lam;
            rhs.axpy(mu, &c, 1.0);
            let j = sys.solve_vec(&rhs);

            let thresh = 1.0 / mu;
            let mut c_new =
                DVector::from_fn(cols, |r, _| soft_threshold(j[r] + lam[r] / mu, thresh));
            if let Some(i) = dict.excluded() {
                c_new[i] = 0.0;
            }
            let diff = &j - &c_new;
            lam.axpy(mu, &diff, 1.0);
            let primal = diff.norm();
            let dual = mu * (&c_new - &c).norm();
            c = c_new;
            ensure_finite(primal + dual, "column iterate")?;

            let scale = 1.0 + c.norm();
            if primal <= cfg.tol_primal * scale && dual <= cfg.tol_dual * scale {
                status = SolveStatus::Converged;
                iterations = k + 1;
                break;
            }
            if cfg.certify && (k + 1) % cfg.certify_every == 0 {
                let thorough = thorough_check(k + 1, cfg.certify_every);
                if let Some(p) = normal.certify(&c, cfg.tol_dual, thorough) {
                    return Ok(finish(p, k + 1, SolveStatus::Certified));
                }
            }
            mu *= cfg.rho;
        }

        if cfg.certify {
            if let Some(p) = normal.certify(&c, cfg.tol_dual, true) {
                return Ok(finish(p, iterations, SolveStatus::Certified));
            }
        }
        Ok(finish(c, iterations, status))
    }
}

/// Solves `min ||c||_1 + (lambda/2) ||x - A c||^2` for one sample.
pub fn solve_column(
    x: &DVector<f64>,
    dictionary: &DMatrix<f64>,
    cfg: &SolveConfig,
) -> Result<ColumnSolution> {
    ColumnSolver::new(dictionary, cfg)?.solve_vector(x, None)
}

/// Column mode: every column against `X_{-i}`, stacked into `C`.
pub fn solve_columns(
    x: &DataMatrix,
    cfg: &SolveConfig,
    warm: Option<&CoefficientMatrix>,
) -> Result<MatrixSolution> {
    let m = x.values();
    let solver = ColumnSolver::new(m, cfg)?;
    let n_cols = m.ncols();
    let mut c = DMatrix::zeros(n_cols, n_cols);
    let mut iterations = 0;
    let mut status = SolveStatus::Certified;
    let mut certified = 0;
    for i in 0..n_cols {
        let w = warm.map(|w| w.values().column(i).into_owned());
        let sol = solver.solve_masked(i, w.as_ref())?;
        iterations = iterations.max(sol.iterations);
        status = status.max(sol.status);
        certified += usize::from(sol.status == SolveStatus::Certified);
        c.set_column(i, &sol.coefficients);
    }
    let objective = matrix_objective(m, &c, cfg.lambda);
    Ok(MatrixSolution {
        coefficients: CoefficientMatrix::new(c)?,
        objective,
        iterations,
        status,
        certified_columns: certified,
    })
}

/// The matrix program with `diag(C) = 0`.
pub fn solve_matrix(
    x: &DataMatrix,
    cfg: &SolveConfig,
    warm: Option<&CoefficientMatrix>,
) -> Result<MatrixSolution> {
    cfg.validate()?;
    let m = x.values();
    let n_cols = m.ncols();
    let lambda = cfg.lambda;
    let gram = m.tr_mul(m);
    let lambda_gram = &gram * lambda;

    let mut polished: Vec<Option<DVector<f64>>> = vec![None; n_cols];
    for (i, slot) in polished.iter_mut().enumerate() {
        let mut corr = gram.column(i).amax_without(i);
        corr *= lambda;
        if corr <= 1.0 {
            *slot = Some(DVector::zeros(n_cols));
        }
    }

    let mut c = warm.map_or_else(|| DMatrix::zeros(n_cols, n_cols), |w| w.values().clone());
    c.fill_diagonal(0.0);
    if cfg.certify && warm.is_some() {
        for (i, slot) in polished.iter_mut().enumerate().filter(|(_, s)| s.is_none()) {
            *slot = normal_equations(m, &gram, i, lambda)
                .descend(c.column(i).into_owned(), cfg.tol_dual);
        }
    }
    let mut lam = DMatrix::<f64>::zeros(n_cols, n_cols);
    let mut mu = cfg.mu();
    let mut status = SolveStatus::MaxIterExceeded;
    let mut iterations = cfg.max_iter;

    if polished.iter().all(Option::is_some) {
        status = SolveStatus::Certified;
        iterations = 0;
    } else {
        let mut ridge = RidgeSystem::new(m, lambda, mu)?;
        for k in 0..cfg.max_iter {
            if mu != ridge.mu() {
                ridge = RidgeSystem::new(m, lambda, mu)?;
            }
            let mut rhs = &lambda_gram - &lam;
            rhs.zip_apply(&c, |r, cv| *r += mu * cv);
            let j = ridge.solve_mat(&rhs);

            let thresh = 1.0 / mu;
            let mut c_new = j.zip_map(&lam, |jv, lv| soft_threshold(jv + lv / mu, thresh));
            c_new.fill_diagonal(0.0);
            let diff = &j - &c_new;
            lam.zip_apply(&diff, |l, dv| *l += mu * dv);
            let primal = diff.norm();
            let dual = mu * (&c_new - &c).norm();
            c = c_new;
            ensure_finite(primal + dual, "matrix iterate")?;

            let scale = 1.0 + c.norm();
            if primal <= cfg.tol_primal * scale && dual <= cfg.tol_dual * scale {
                status = SolveStatus::Converged;
                iterations = k + 1;
                break;
            }
            if cfg.certify && (k + 1) % cfg.certify_every == 0 {
                let thorough = thorough_check(k + 1, cfg.certify_every);
                certify_pending(m, &gram, &c, &mut polished, lambda, cfg.tol_dual, thorough);
                if polished.iter().all(Option::is_some) {
                    status = SolveStatus::Certified;
                    iterations = k + 1;
                    break;
                }
            }
            mu *= cfg.rho;
        }
        if cfg.certify && status != SolveStatus::Certified {
            certify_pending(m, &gram, &c, &mut polished, lambda, cfg.tol_dual, true);
        }
    }

    let mut certified = 0;
    for (i, p) in polished.iter().enumerate() {
        if let Some(col) = p {
            c.set_column(i, col);
            certified += 1;
        }
    }
    if certified == n_cols {
        status = SolveStatus::Certified;
    }
    let objective = matrix_objective(m, &c, lambda);
    Ok(MatrixSolution {
        coefficients: CoefficientMatrix::new(c)?,
        objective,
        iterations,
        status,
        certified_columns: certified,
    })
}

fn certify_pending(
    m: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    c: &DMatrix<f64>,
    polished: &mut [Option<DVector<f64>>],
    lambda: f64,
    tol: f64,
    thorough: bool,
) {
    for (i, slot) in polished.iter_mut().enumerate() {
        if slot.is_none() {
            *slot = normal_equations(m, gram, i, lambda).certify(
                &c.column(i).into_owned(),
                tol,
                thorough,
            );
        }
    }
}

fn normal_equations<'a>(
    m: &DMatrix<f64>,
    gram: &'a DMatrix<f64>,
    i: usize,
    lambda: f64,
) -> NormalEquations<'a> {
    NormalEquations::new(
        gram,
        gram.column(i).into_owned(),
        Some(i),
        m.nrows(),
        lambda,
    )
}

trait AmaxWithout {
    fn amax_without(&self, skip: usize) -> f64;
}

impl<S: nalgebra::storage::Storage<f64, nalgebra::Dyn>> AmaxWithout
    for nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn amax_without(&self, skip: usize) -> f64 {
        self.iter()
            .enumerate()
            .filter(|&(j, _)| j != skip)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Dispatches on `cfg.mode`.
pub fn solve(
    x: &DataMatrix,
    cfg: &SolveConfig,
    warm: Option<&CoefficientMatrix>,
) -> Result<MatrixSolution> {
    match cfg.mode {
        SolveMode::Column => solve_columns(x, cfg, warm),
        SolveMode::Matrix => solve_matrix(x, cfg, warm),
    }
}
