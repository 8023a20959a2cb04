//! Self-expressiveness metrics and clustering accuracy.

use nalgebra::DMatrix;
use pathfinding::prelude::{kuhn_munkres, Matrix};
use serde::{Deserialize, Serialize};

use crate::data::CoefficientMatrix;
use crate::error::{Result, SscError};

/// Relative violation above which a cell is drawn gray in phase plots.
pub const GRAY_THRESHOLD: f64 = 0.1;

/// Largest `L` scored by enumerating all label permutations.
const MAX_BRUTE_FORCE: usize = 8;

/// Per-column zero floor: `eps_rel * max(1, ||c_i||_inf)`.
fn column_eps(c: &DMatrix<f64>, j: usize, eps_rel: f64) -> f64 {
    eps_rel * c.column(j).amax().max(1.0)
}

/// `c` with every entry at or below its column's floor set to zero.
pub fn clean_coefficients(c: &CoefficientMatrix, eps_rel: f64) -> CoefficientMatrix {
    let mut m = c.values().clone();
    for j in 0..m.ncols() {
        let eps = column_eps(c.values(), j, eps_rel);
        m.column_mut(j)
            .iter_mut()
            .filter(|v| v.abs() <= eps)
            .for_each(|v| *v = 0.0);
    }
    CoefficientMatrix::new(m).expect("zeroing entries keeps a valid matrix")
}

fn check_labels(c: &CoefficientMatrix, labels: &[usize]) -> Result<()> {
    if labels.len() != c.len() {
        return Err(SscError::DimensionMismatch(format!(
            "{} labels for {} columns",
            labels.len(),
            c.len()
        )));
    }
    Ok(())
}

/// Off-mask mass over in-mask mass after the cleanup, where the mask holds
/// the pairs with equal labels.
pub fn rel_violation(c: &CoefficientMatrix, labels: &[usize], eps_rel: f64) -> Result<f64> {
    check_labels(c, labels)?;
    let cleaned = clean_coefficients(c, eps_rel);
    let m = cleaned.values();
    let (mut inside, mut outside) = (0.0, 0.0);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if labels[i] == labels[j] {
                inside += m[(i, j)].abs();
            } else {
                outside += m[(i, j)].abs();
            }
        }
    }
    if inside == 0.0 {
        return Err(SscError::AllZeroMass);
    }
    Ok(outside / inside)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SepCheck {
    /// No trivial column and no surviving entry across labels.
    pub sep_holds: bool,
    /// Columns with every entry at or below the floor.
    pub trivial_columns: usize,
}

pub fn check_sep_and_trivial(
    c: &CoefficientMatrix,
    labels: &[usize],
    eps_rel: f64,
) -> Result<SepCheck> {
    check_labels(c, labels)?;
    let cleaned = clean_coefficients(c, eps_rel);
    let m = cleaned.values();
    let mut trivial = 0;
    let mut crossing = false;
    for j in 0..m.ncols() {
        let col = m.column(j);
        if col.iter().all(|&v| v == 0.0) {
            trivial += 1;
        }
        crossing |= col
            .iter()
            .enumerate()
            .any(|(i, &v)| v != 0.0 && labels[i] != labels[j]);
    }
    Ok(SepCheck {
        sep_holds: trivial == 0 && !crossing,
        trivial_columns: trivial,
    })
}

/// Cell classification, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Some column is entirely zero.
    Trivial,
    /// Nonzero relative violation.
    Gray,
    /// Zero relative violation and no trivial column.
    White,
}

impl Verdict {
    /// `rel_violation = None` (no in-mask mass) only happens with trivial
    /// columns, and is classified as trivial.
    pub fn classify(trivial_columns: usize, rel_violation: Option<f64>) -> Self {
        match rel_violation {
            _ if trivial_columns > 0 => Verdict::Trivial,
            None => Verdict::Trivial,
            Some(v) if v == 0.0 => Verdict::White,
            Some(_) => Verdict::Gray,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Trivial => "trivial",
            Verdict::Gray => "gray",
            Verdict::White => "white",
        }
    }
}

impl std::str::FromStr for Verdict {
    type Err = SscError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trivial" => Ok(Verdict::Trivial),
            "gray" => Ok(Verdict::Gray),
            "white" => Ok(Verdict::White),
            other => Err(SscError::InvalidInput(format!("unknown verdict {other:?}"))),
        }
    }
}

fn confusion(assignments: &[usize], truth: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if assignments.len() != truth.len() {
        return Err(SscError::DimensionMismatch(format!(
            "{} assignments for {} labels",
            assignments.len(),
            truth.len()
        )));
    }
    let mut m = vec![vec![0usize; k]; k];
    for (&a, &t) in assignments.iter().zip(truth) {
        for label in [a, t] {
            if label >= k {
                return Err(SscError::LabelRangeMismatch { label, classes: k });
            }
        }
        m[a][t] += 1;
    }
    Ok(m)
}

fn best_by_permutation(m: &[Vec<usize>]) -> usize {
    fn search(m: &[Vec<usize>], row: usize, used: &mut [bool], acc: usize, best: &mut usize) {
        if row == m.len() {
            *best = (*best).max(acc);
            return;
        }
        for col in 0..m.len() {
            if !used[col] {
                used[col] = true;
                search(m, row + 1, used, acc + m[row][col], best);
                used[col] = false;
            }
        }
    }
    let mut best = 0;
    search(m, 0, &mut vec![false; m.len()], 0, &mut best);
    best
}

fn best_by_assignment(m: &[Vec<usize>]) -> usize {
    let weights = Matrix::from_rows(m.iter().map(|r| r.iter().map(|&v| v as i64)))
        .expect("confusion matrix rows have equal length");
    kuhn_munkres(&weights).0 as usize
}

/// Largest fraction of agreeing labels over all relabelings of
/// `assignments`. Labels must lie in `0..k`.
pub fn clustering_accuracy(assignments: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    if truth.is_empty() {
        return Err(SscError::InvalidInput("no labels to compare".into()));
    }
    let m = confusion(assignments, truth, k)?;
    let agree = if k <= MAX_BRUTE_FORCE {
        best_by_permutation(&m)
    } else {
        best_by_assignment(&m)
    };
    Ok(agree as f64 / truth.len() as f64)
}
