//! Solves with `lambda A^T A + mu I`.
//!
//! When the dictionary has fewer rows than columns the `N x N` system is
//! handled through the Woodbury identity with the `n x n` matrix
//! `mu I + lambda A A^T`, which is SPD for the same reason.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Result, SscError};

const JITTER: f64 = 1e-10;

enum Factor {
    Direct(Cholesky<f64, Dyn>),
    Woodbury(Cholesky<f64, Dyn>),
}

pub(crate) struct RidgeSystem<'a> {
    a: &'a DMatrix<f64>,
    lambda: f64,
    mu: f64,
    factor: Factor,
}

fn cholesky_with_jitter(mut m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Ok(ch);
    }
    for i in 0..m.nrows() {
        m[(i, i)] += JITTER;
    }
    Cholesky::new(m).ok_or(SscError::CholeskyFailure)
}

impl<'a> RidgeSystem<'a> {
    pub(crate) fn new(a: &'a DMatrix<f64>, lambda: f64, mu: f64) -> Result<Self> {
        let (n, cols) = a.shape();
        let factor = if cols <= n {
            let mut k = a.tr_mul(a) * lambda;
            for i in 0..cols {
                k[(i, i)] += mu;
            }
            Factor::Direct(cholesky_with_jitter(k)?)
        } else {
            let mut s = (a * a.transpose()) * lambda;
            for i in 0..n {
                s[(i, i)] += mu;
            }
            Factor::Woodbury(cholesky_with_jitter(s)?)
        };
        Ok(Self {
            a,
            lambda,
            mu,
            factor,
        })
    }

    pub(crate) fn mu(&self) -> f64 {
        self.mu
    }

    pub(crate) fn solve_vec(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            Factor::Direct(ch) => ch.solve(rhs),
            Factor::Woodbury(ch) => {
                let mut w = self.a * rhs;
                ch.solve_mut(&mut w);
                let mut out = rhs.clone();
                out.gemv_tr(-self.lambda, self.a, &w, 1.0);
                out / self.mu
            }
        }
    }

    pub(crate) fn solve_mat(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.factor {
            Factor::Direct(ch) => ch.solve(rhs),
            Factor::Woodbury(ch) => {
                let mut w = self.a * rhs;
                ch.solve_mut(&mut w);
                let mut out = rhs.clone();
                out.gemm_tr(-self.lambda, self.a, &w, 1.0);
                out / self.mu
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = RngSpec::new(seed).rng();
        DMatrix::from_fn(rows, cols, |_, _| rng.normal())
    }

    #[test]
    fn both_routes_invert_the_same_operator() {
        for &(n, cols) in &[(8, 5), (5, 12)] {
            let a = random(n, cols, 3);
            let (lambda, mu) = (2.5, 0.7);
            let sys = RidgeSystem::new(&a, lambda, mu).unwrap();
            let mut k = a.tr_mul(&a) * lambda;
            for i in 0..cols {
                k[(i, i)] += mu;
            }
            let x = random(cols, 3, 4);
            let rhs = &k * &x;
            let got = sys.solve_mat(&rhs);
            assert!((&got - &x).amax() < 1e-9, "{n}x{cols}");
            let v = x.column(0).into_owned();
            let got_v = sys.solve_vec(&(&k * &v));
            assert!((got_v - v).amax() < 1e-9);
        }
    }
}
