//! Optimality conditions of the column LASSO
//! `min ||c||_1 + (lambda/2) ||x - A c||^2`.
//!
//! At an optimum the dual point is `nu = lambda (x - A c)`; it satisfies
//! `a_j^T nu = sign(c_j)` on the support and `|a_j^T nu| <= 1` elsewhere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::project_onto;
use crate::error::{Result, SscError};

/// Relative threshold for declaring a coefficient nonzero.
pub const SUPPORT_EPS_REL: f64 = 1e-6;

/// `1e-6 * max(1, ||c||_inf)`.
pub fn support_eps(c: &DVector<f64>) -> f64 {
    SUPPORT_EPS_REL * c.amax().max(1.0)
}

/// A dictionary matrix, optionally with one column masked out. Masking is how
/// column `i` of `X` is solved against `X_{-i}` without copying.
#[derive(Debug, Clone, Copy)]
pub struct Dictionary<'a> {
    matrix: &'a DMatrix<f64>,
    excluded: Option<usize>,
}

impl<'a> Dictionary<'a> {
    pub fn full(matrix: &'a DMatrix<f64>) -> Self {
        Self {
            matrix,
            excluded: None,
        }
    }

    pub fn masked(matrix: &'a DMatrix<f64>, excluded: usize) -> Self {
        Self {
            matrix,
            excluded: Some(excluded),
        }
    }

    pub fn matrix(&self) -> &'a DMatrix<f64> {
        self.matrix
    }

    pub fn excluded(&self) -> Option<usize> {
        self.excluded
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_active(&self, j: usize) -> bool {
        self.excluded != Some(j)
    }

    /// `A^T v`, with the masked entry set to zero.
    pub fn correlations(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = self.matrix.tr_mul(v);
        if let Some(i) = self.excluded {
            out[i] = 0.0;
        }
        out
    }

    /// `A c`, ignoring the masked entry of `c`.
    pub fn apply(&self, c: &DVector<f64>) -> DVector<f64> {
        let mut out = self.matrix * c;
        if let Some(i) = self.excluded {
            if c[i] != 0.0 {
                out.axpy(-c[i], &self.matrix.column(i), 1.0);
            }
        }
        out
    }
}

impl<'a> From<&'a DMatrix<f64>> for Dictionary<'a> {
    fn from(m: &'a DMatrix<f64>) -> Self {
        Dictionary::full(m)
    }
}

/// `||c||_1 + (lambda/2) ||x - A c||^2`.
pub fn column_objective(
    x: &DVector<f64>,
    dict: &Dictionary<'_>,
    c: &DVector<f64>,
    lambda: f64,
) -> f64 {
    let e = x - dict.apply(c);
    c.lp_norm(1) + 0.5 * lambda * e.norm_squared()
}

/// Dual vector `nu = lambda e` and its split against a subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub nu: Vec<f64>,
    /// `P_S nu`, present when a basis was supplied.
    pub nu1: Option<Vec<f64>>,
    /// `P_{S^perp} nu`, present when a basis was supplied.
    pub nu2: Option<Vec<f64>>,
    pub support: Vec<usize>,
}

impl DualCertificate {
    pub fn nu_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.nu)
    }
}

pub fn recover_dual(
    x: &DVector<f64>,
    dict: &Dictionary<'_>,
    c: &DVector<f64>,
    lambda: f64,
    basis: Option<&DMatrix<f64>>,
) -> Result<DualCertificate> {
    if x.len() != dict.nrows() || c.len() != dict.ncols() {
        return Err(SscError::DimensionMismatch(format!(
            "x has length {}, c has length {}, dictionary is {} x {}",
            x.len(),
            c.len(),
            dict.nrows(),
            dict.ncols()
        )));
    }
    let nu = (x - dict.apply(c)) * lambda;
    let eps = support_eps(c);
    let support = (0..c.len())
        .filter(|&j| dict.is_active(j) && c[j].abs() > eps)
        .collect();
    let (nu1, nu2) = match basis {
        Some(u) => {
            let p = project_onto(u, &nu)?;
            let perp = &nu - &p;
            (
                Some(p.iter().copied().collect()),
                Some(perp.iter().copied().collect()),
            )
        }
        None => (None, None),
    };
    Ok(DualCertificate {
        nu: nu.iter().copied().collect(),
        nu1,
        nu2,
        support,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub sign_match: bool,
    pub box_ok: bool,
    /// Largest `|a_j^T nu|` off the support (0 when every column is active).
    pub max_abs_inactive: f64,
    /// Largest `|a_j^T nu - sign(c_j)|` on the support.
    pub max_sign_gap: f64,
}

/// Checks `A_S^T nu = sign(c_S)` and `||A^T nu||_inf <= 1 + tol`.
pub fn verify_certificate(
    cert: &DualCertificate,
    dict: &Dictionary<'_>,
    c: &DVector<f64>,
    tol: f64,
) -> CertificateReport {
    let corr = dict.correlations(&cert.nu_vector());
    let mut on_support = vec![false; c.len()];
    let mut max_sign_gap: f64 = 0.0;
    for &j in &cert.support {
        on_support[j] = true;
        max_sign_gap = max_sign_gap.max((corr[j] - c[j].signum()).abs());
    }
    let mut max_abs_inactive: f64 = 0.0;
    for j in (0..c.len()).filter(|&j| dict.is_active(j) && !on_support[j]) {
        max_abs_inactive = max_abs_inactive.max(corr[j].abs());
    }
    let max_abs = (0..c.len())
        .filter(|&j| dict.is_active(j))
        .map(|j| corr[j].abs())
        .fold(0.0, f64::max);
    CertificateReport {
        sign_match: max_sign_gap <= tol,
        box_ok: max_abs <= 1.0 + tol,
        max_abs_inactive,
        max_sign_gap,
    }
}

/// Largest violation of the optimality conditions at `c`.
pub fn kkt_residual(x: &DVector<f64>, dict: &Dictionary<'_>, c: &DVector<f64>, lambda: f64) -> f64 {
    let nu = (x - dict.apply(c)) * lambda;
    let corr = dict.correlations(&nu);
    let eps = support_eps(c);
    (0..c.len())
        .filter(|&j| dict.is_active(j))
        .map(|j| {
            if c[j].abs() > eps {
                (corr[j] - c[j].signum()).abs()
            } else {
                (corr[j].abs() - 1.0).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `1 / ||A^T x||_inf`: the largest lambda at which `c = 0` is optimal.
pub fn min_nontrivial_lambda(x: &DVector<f64>, dict: &Dictionary<'_>) -> Result<f64> {
    if dict.ncols() == 0 || dict.ncols() == 1 && dict.excluded() == Some(0) {
        return Err(SscError::InvalidInput(
            "dictionary has no active column".into(),
        ));
    }
    let m = dict.correlations(x).amax();
    if m <= 1e-12 {
        return Err(SscError::DegenerateDictionary(m));
    }
    Ok(1.0 / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn dual_at_zero_coefficients_is_scaled_sample() {
        let a = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        let x = dvector![0.3, 0.4, 0.5];
        let cert = recover_dual(&x, &Dictionary::full(&a), &dvector![0.0, 0.0], 3.0, None).unwrap();
        assert_abs_diff_eq!(cert.nu_vector(), x * 3.0, epsilon = 1e-15);
        assert!(cert.support.is_empty());
    }

    #[test]
    fn one_dimensional_certificate() {
        // lambda = 2, c = 0.5: nu = 2 (1 - 0.5) a = a, so a^T nu = 1
        let a = dmatrix![1.0; 0.0];
        let dict = Dictionary::full(&a);
        let x = dvector![1.0, 0.0];
        let c = dvector![0.5];
        let cert = recover_dual(&x, &dict, &c, 2.0, None).unwrap();
        assert_abs_diff_eq!(cert.nu_vector(), dvector![1.0, 0.0], epsilon = 1e-15);
        assert_eq!(cert.support, vec![0]);
        let rep = verify_certificate(&cert, &dict, &c, 1e-12);
        assert!(rep.sign_match && rep.box_ok);

        let off = dvector![0.6];
        let cert = recover_dual(&x, &dict, &off, 2.0, None).unwrap();
        let rep = verify_certificate(&cert, &dict, &off, 1e-4);
        assert!(!rep.sign_match || !rep.box_ok);
    }

    #[test]
    fn exact_representation_has_zero_dual() {
        let a = dmatrix![1.0, 0.0; 0.0, 1.0];
        let x = dvector![0.6, 0.8];
        let cert = recover_dual(&x, &Dictionary::full(&a), &dvector![0.6, 0.8], 5.0, None).unwrap();
        assert_eq!(cert.nu_vector().amax(), 0.0);
    }

    #[test]
    fn zero_solution_certified_below_threshold() {
        let a = dmatrix![1.0, 0.0; 0.0, 0.5];
        let x = dvector![0.3, 0.8];
        let dict = Dictionary::full(&a);
        let thr = min_nontrivial_lambda(&x, &dict).unwrap();
        // ||A^T x||_inf = max(0.3, 0.4)
        assert_abs_diff_eq!(thr, 2.5, epsilon = 1e-15);
        let c = dvector![0.0, 0.0];
        let cert = recover_dual(&x, &dict, &c, 0.9 * thr, None).unwrap();
        assert!(verify_certificate(&cert, &dict, &c, 1e-12).box_ok);
        let cert = recover_dual(&x, &dict, &c, 1.1 * thr, None).unwrap();
        assert!(!verify_certificate(&cert, &dict, &c, 1e-12).box_ok);
    }

    #[test]
    fn nontrivial_threshold_examples() {
        let a = dmatrix![1.0; 0.0];
        let x = dvector![1.0, 0.0];
        assert_eq!(
            min_nontrivial_lambda(&x, &Dictionary::full(&a)).unwrap(),
            1.0
        );
        let b = dmatrix![0.0, 0.5; 1.0, 0.0; 0.0, 0.0];
        let y = dvector![1.0, 0.0, 0.0];
        assert_eq!(
            min_nontrivial_lambda(&y, &Dictionary::full(&b)).unwrap(),
            2.0
        );
        let orth = dmatrix![0.0; 1.0];
        assert!(matches!(
            min_nontrivial_lambda(&x, &Dictionary::full(&orth)),
            Err(SscError::DegenerateDictionary(_))
        ));
    }

    #[test]
    fn split_against_basis_sums_back() {
        let a = dmatrix![1.0, 0.2; 0.0, 1.0; 0.3, 0.1];
        let x = dvector![0.5, -0.2, 0.9];
        let u = dmatrix![1.0; 0.0; 0.0];
        let cert = recover_dual(
            &x,
            &Dictionary::full(&a),
            &dvector![0.1, 0.0],
            2.0,
            Some(&u),
        )
        .unwrap();
        let nu1 = DVector::from_vec(cert.nu1.clone().unwrap());
        let nu2 = DVector::from_vec(cert.nu2.clone().unwrap());
        assert!((nu1 + nu2 - cert.nu_vector()).amax() <= 1e-10);
    }

    #[test]
    fn masked_dictionary_ignores_column() {
        let a = dmatrix![1.0, 0.0, 1.0; 0.0, 1.0, 1.0];
        let d = Dictionary::masked(&a, 2);
        let corr = d.correlations(&dvector![1.0, 1.0]);
        assert_eq!(corr, dvector![1.0, 1.0, 0.0]);
        assert_eq!(d.apply(&dvector![1.0, 2.0, 5.0]), dvector![1.0, 2.0]);
    }
}
