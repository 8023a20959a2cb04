//! Dense symmetric eigensolver.
//!
//! Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
//! `JACOBI_TOL` (relative to the matrix norm). Above `JACOBI_MAX_DIM` the
//! Householder tridiagonal QR from nalgebra is used instead, since Jacobi
//! sweeps grow cubically with a larger constant.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SscError};

pub const JACOBI_TOL: f64 = 1e-10;
pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_MAX_DIM: usize = 400;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

pub fn jacobi_eigen(m: &DMatrix<f64>) -> Result<Eigen> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let mut converged = off_diagonal_norm(&a) <= JACOBI_TOL * scale;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(SscError::EigenFailure(JACOBI_MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(&a) <= JACOBI_TOL * scale;
    }
    Ok(sorted(a.diagonal(), v))
}

fn sorted(values: DVector<f64>, vectors: DMatrix<f64>) -> Eigen {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    Eigen {
        values: DVector::from_iterator(values.len(), order.iter().map(|&i| values[i])),
        vectors: vectors.select_columns(&order),
    }
}

/// Jacobi up to `JACOBI_MAX_DIM`, Householder QR beyond.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<Eigen> {
    if m.nrows() <= JACOBI_MAX_DIM {
        return jacobi_eigen(m);
    }
    let e = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(SscError::EigenFailure(10_000))?;
    Ok(sorted(e.eigenvalues, e.eigenvectors))
}
