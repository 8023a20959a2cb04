//! File formats.
//!
//! Matrix CSV: the first line holds the shape as `rows,cols`; each of the
//! following `rows` lines holds `cols` comma-separated decimals. Values are
//! written with the shortest representation that round-trips, so writing is
//! bit-exact and byte-deterministic.
//!
//! Labels: one non-negative integer per line.
//!
//! Ensemble JSON: `{"dims": [d_1, ...], "bases": [U_1, ...]}` where each
//! `U_l` is a list of `n` rows of `d_l` numbers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{CoefficientMatrix, DataMatrix, SubspaceEnsemble};
use crate::error::{Result, SscError};

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 20 + 16);
    let _ = writeln!(out, "{},{}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str, origin: &str) -> Result<DMatrix<f64>> {
    let parse_err = |msg: String| SscError::Parse {
        path: origin.to_string(),
        msg,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| parse_err("empty file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(format!("bad header {header:?}: {e}")))?;
    let [rows, cols] = dims[..] else {
        return Err(parse_err(format!(
            "header must be `rows,cols`, got {header:?}"
        )));
    };
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let line = lines
            .next()
            .ok_or_else(|| parse_err(format!("expected {rows} rows, found {r}")))?;
        let before = values.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("row {r}: bad number {tok:?}: {e}")))?;
            values.push(v);
        }
        if values.len() - before != cols {
            return Err(parse_err(format!(
                "row {r} has {} entries, expected {cols}",
                values.len() - before
            )));
        }
    }
    if lines.next().is_some() {
        return Err(parse_err(format!("more than {rows} data rows")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SscError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SscError::io(path, e))
}

pub fn read_data_matrix(path: &Path) -> Result<DataMatrix> {
    let m = matrix_from_csv(&read_text(path)?, &path.display().to_string())?;
    DataMatrix::new(m)
}

pub fn write_data_matrix(path: &Path, m: &DataMatrix) -> Result<()> {
    write_text(path, &matrix_to_csv(m.values()))
}

pub fn read_coefficients(path: &Path) -> Result<CoefficientMatrix> {
    let m = matrix_from_csv(&read_text(path)?, &path.display().to_string())?;
    CoefficientMatrix::new(m)
}

pub fn write_coefficients(path: &Path, c: &CoefficientMatrix) -> Result<()> {
    write_text(path, &matrix_to_csv(c.values()))
}

pub fn labels_to_text(labels: &[usize]) -> String {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    out
}

pub fn labels_from_text(text: &str, origin: &str) -> Result<Vec<usize>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse().map_err(|e| SscError::Parse {
                path: origin.to_string(),
                msg: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    labels_from_text(&read_text(path)?, &path.display().to_string())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write_text(path, &labels_to_text(labels))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnsembleFile {
    pub dims: Vec<usize>,
    pub bases: Vec<Vec<Vec<f64>>>,
}

impl From<&SubspaceEnsemble> for EnsembleFile {
    fn from(e: &SubspaceEnsemble) -> Self {
        let bases = e
            .bases()
            .iter()
            .map(|u| {
                (0..u.nrows())
                    .map(|i| u.row(i).iter().copied().collect())
                    .collect()
            })
            .collect();
        Self {
            dims: e.dims(),
            bases,
        }
    }
}

impl EnsembleFile {
    pub fn into_ensemble(self) -> Result<SubspaceEnsemble> {
        if self.dims.len() != self.bases.len() {
            return Err(SscError::InvalidInput(
                "ensemble dims and bases lengths differ".into(),
            ));
        }
        let mut bases = Vec::with_capacity(self.bases.len());
        for (l, (rows, &d)) in self.bases.iter().zip(&self.dims).enumerate() {
            if rows.iter().any(|r| r.len() != d) {
                return Err(SscError::DimensionMismatch(format!(
                    "basis {l}: every row must have {d} entries"
                )));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            bases.push(DMatrix::from_row_slice(rows.len(), d, &flat));
        }
        SubspaceEnsemble::new(bases)
    }
}

pub fn read_ensemble(path: &Path) -> Result<SubspaceEnsemble> {
    let file: EnsembleFile = serde_json::from_str(&read_text(path)?)?;
    file.into_ensemble()
}

pub fn write_ensemble(path: &Path, e: &SubspaceEnsemble) -> Result<()> {
    write_json(path, &EnsembleFile::from(e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}
