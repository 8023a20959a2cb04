//! Projected dual directions and projected subspace incoherence.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{project_onto, LabeledDataset};
use crate::error::{Result, SscError};
use crate::solver::{solve_column, ColumnSolver, SolveConfig};

/// Below this norm `P_S nu` has no direction.
pub const DEGENERATE_DUAL_TOL: f64 = 1e-10;

fn direction_from_dual(nu: &DVector<f64>, basis: &DMatrix<f64>) -> Result<DVector<f64>> {
    let p = project_onto(basis, nu)?;
    let norm = p.norm();
    if !(norm > DEGENERATE_DUAL_TOL) {
        return Err(SscError::DegenerateDual(norm));
    }
    Ok(p / norm)
}

/// `v = P_S nu / ||P_S nu||` with `nu = lambda (x - A c*)` the dual optimum of
/// the column program against `dictionary`.
pub fn projected_dual_direction(
    x: &DVector<f64>,
    dictionary: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    lambda: f64,
    cfg: &SolveConfig,
) -> Result<DVector<f64>> {
    let cfg = SolveConfig {
        lambda,
        ..cfg.clone()
    };
    let sol = solve_column(x, dictionary, &cfg)?;
    direction_from_dual(&(sol.residual * lambda), basis)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    /// `mu_l` for each subspace.
    pub mu: Vec<f64>,
    /// Columns whose projected dual vanished; they contribute no direction.
    pub skipped_columns: Vec<usize>,
    /// True when external points were the noisy samples because no clean
    /// data was available.
    pub proxy: bool,
}

/// `mu_l = max ||V_l^T y||_inf` over external points `y`, where column `i` of
/// `V_l` is the projected dual direction of `x_i` against the other samples
/// of its own subspace.
pub fn subspace_incoherence(
    dataset: &LabeledDataset,
    lambda: f64,
    cfg: &SolveConfig,
) -> Result<IncoherenceReport> {
    let ensemble = dataset.ensemble.as_ref().ok_or_else(|| {
        SscError::InvalidInput("subspace bases are required for incoherence".into())
    })?;
    let l_count = dataset.num_subspaces();
    if l_count < 2 {
        return Err(SscError::InvalidInput(
            "incoherence needs at least two subspaces".into(),
        ));
    }
    let cfg = SolveConfig {
        lambda,
        ..cfg.clone()
    };
    let x = dataset.data.values();
    let (external, proxy) = match &dataset.clean {
        Some(y) => (y.values(), false),
        None => (x, true),
    };

    let mut mu = vec![0.0; l_count];
    let mut skipped = Vec::new();
    for (l, mu_l) in mu.iter_mut().enumerate() {
        let members = dataset.members(l);
        if members.is_empty() {
            continue;
        }
        let outside: Vec<usize> = (0..x.ncols()).filter(|&j| dataset.labels[j] != l).collect();
        let mut ext = external.select_columns(&outside);
        if proxy {
            for mut col in ext.column_iter_mut() {
                let n = col.norm();
                if n > 0.0 {
                    col /= n;
                }
            }
        }
        let block = x.select_columns(&members);
        let solver = if members.len() > 1 {
            Some(ColumnSolver::new(&block, &cfg)?)
        } else {
            None
        };
        for (local, &global) in members.iter().enumerate() {
            let nu = match &solver {
                Some(s) => s.solve_masked(local, None)?.residual * lambda,
                None => block.column(local) * lambda,
            };
            match direction_from_dual(&nu, ensemble.basis(l)) {
                Ok(v) => {
                    let worst = ext.tr_mul(&v).amax();
                    *mu_l = f64::max(*mu_l, worst.min(1.0));
                }
                Err(SscError::DegenerateDual(_)) => skipped.push(global),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(IncoherenceReport {
        mu,
        skipped_columns: skipped,
        proxy,
    })
}
