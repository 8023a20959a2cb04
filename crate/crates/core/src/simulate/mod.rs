//! Seeded synthetic data: unions of subspaces with optional noise.
//!
//! Samples are laid out subspace by subspace, so labels are contiguous.
//! Every draw comes from [`RngSpec`] child streams: stream 0 for subspaces,
//! `1 + l` for the samples of subspace `l`, and `1000 + l` for noise.

mod checks;

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{orthonormalize, DataMatrix, LabeledDataset, SubspaceEnsemble};
use crate::error::{Result, SscError};
use crate::io::{write_data_matrix, write_ensemble, write_json, write_labels, EnsembleFile};
use crate::rng::{PortableRng, RngSpec};

pub use checks::{gaussian_norm_check, spherical_cap_check, CapCheck, NormCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Uniformly random subspaces, uniform samples on each unit sphere.
    FullyRandom,
    /// Fixed subspaces, uniform samples on each unit sphere.
    SemiRandom,
    /// Fixed subspaces, samples with a decaying spectrum inside each one.
    DeterministicSubspaces,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counts {
    /// `N_l` per subspace.
    Explicit(Vec<usize>),
    /// `N_l = round(kappa d_l)`.
    Kappa(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarialPolicy {
    /// Push toward the closest clean point of another subspace, with the
    /// component inside the own subspace removed.
    TowardNearestOtherSubspace,
    /// A uniformly random direction.
    RandomFixedNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    #[default]
    None,
    /// Entries iid `N(0, sigma^2 / n)`.
    Gaussian { sigma: f64 },
    /// Every column of `Z` has norm exactly `delta`.
    Adversarial {
        delta: f64,
        policy: AdversarialPolicy,
    },
}

impl Noise {
    fn is_zero(&self) -> bool {
        match *self {
            Noise::None => true,
            Noise::Gaussian { sigma } => sigma == 0.0,
            Noise::Adversarial { delta, .. } => delta == 0.0,
        }
    }
}

fn default_decay() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub n: usize,
    pub dims: Vec<usize>,
    pub counts: Counts,
    #[serde(default)]
    pub noise: Noise,
    /// Rescale noisy columns to unit norm.
    #[serde(default)]
    pub normalize_noisy: bool,
    /// Bases for the fixed-subspace models. When absent, subspace `l` is
    /// spanned by consecutive coordinate axes starting at `l * d_l`, wrapping
    /// modulo `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspaces: Option<EnsembleFile>,
    /// Ratio between successive singular values of the samples in the
    /// deterministic model.
    #[serde(default = "default_decay")]
    pub spectrum_decay: f64,
}

impl ModelSpec {
    /// `L` subspaces of dimension `d` with `N_l = round(kappa d)`.
    pub fn uniform(model: Model, n: usize, d: usize, l: usize, kappa: f64, noise: Noise) -> Self {
        Self {
            model,
            n,
            dims: vec![d; l],
            counts: Counts::Kappa(kappa),
            noise,
            normalize_noisy: false,
            subspaces: None,
            spectrum_decay: default_decay(),
        }
    }

    pub fn counts(&self) -> Vec<usize> {
        match &self.counts {
            Counts::Explicit(c) => c.clone(),
            Counts::Kappa(k) => self
                .dims
                .iter()
                .map(|&d| (k * d as f64).round() as usize)
                .collect(),
        }
    }

    pub fn total_samples(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SscError::InvalidSpec(msg));
        if self.dims.is_empty() {
            return bad("at least one subspace is required".into());
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0 || d >= self.n) {
            return bad(format!(
                "subspace dimension {d} must satisfy 1 <= d < n = {}",
                self.n
            ));
        }
        if let Counts::Kappa(k) = self.counts {
            if !(k > 0.0 && k.is_finite()) {
                return bad("kappa must be positive".into());
            }
        }
        let counts = self.counts();
        if counts.len() != self.dims.len() {
            return bad("one count per subspace is required".into());
        }
        for (l, (&c, &d)) in counts.iter().zip(&self.dims).enumerate() {
            if c < d {
                return bad(format!(
                    "subspace {l} has {c} samples, fewer than its dimension {d}"
                ));
            }
        }
        if counts.iter().sum::<usize>() < 2 {
            return bad("at least two samples are required".into());
        }
        match self.noise {
            Noise::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                return bad("sigma must be finite and non-negative".into())
            }
            Noise::Adversarial { delta, .. } if !(delta >= 0.0 && delta.is_finite()) => {
                return bad("delta must be finite and non-negative".into())
            }
            _ => {}
        }
        if !(self.spectrum_decay > 0.0 && self.spectrum_decay <= 1.0) {
            return bad("spectrum_decay must lie in (0, 1]".into());
        }
        if let Some(file) = &self.subspaces {
            if file.dims != self.dims {
                return bad("supplied subspaces do not match dims".into());
            }
        }
        Ok(())
    }
}

fn random_basis(n: usize, d: usize, rng: &mut PortableRng) -> Result<DMatrix<f64>> {
    let g = DMatrix::from_fn(n, d, |_, _| rng.normal());
    orthonormalize(&g)
}

fn coordinate_basis(n: usize, d: usize, offset: usize) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(n, d);
    for k in 0..d {
        u[((offset + k) % n, k)] = 1.0;
    }
    u
}

fn build_ensemble(spec: &ModelSpec, rng: &RngSpec) -> Result<SubspaceEnsemble> {
    let spec_err = |e: SscError| SscError::InvalidSpec(e.to_string());
    match (spec.model, &spec.subspaces) {
        (Model::FullyRandom, _) => {
            let mut r = rng.child(0).rng();
            let bases = spec
                .dims
                .iter()
                .map(|&d| random_basis(spec.n, d, &mut r))
                .collect::<Result<_>>()?;
            SubspaceEnsemble::new(bases)
        }
        (_, Some(file)) => file.clone().into_ensemble().map_err(spec_err),
        (_, None) => {
            let mut offset = 0;
            let bases = spec
                .dims
                .iter()
                .map(|&d| {
                    let u = coordinate_basis(spec.n, d, offset);
                    offset += d;
                    u
                })
                .collect();
            SubspaceEnsemble::new(bases)
        }
    }
}

fn sample_coefficients(spec: &ModelSpec, d: usize, rng: &mut PortableRng) -> DVector<f64> {
    match spec.model {
        Model::DeterministicSubspaces => {
            let mut scale = 1.0;
            let mut a = DVector::zeros(d);
            for k in 0..d {
                a[k] = scale * rng.normal();
                scale *= spec.spectrum_decay;
            }
            let norm = a.norm();
            if norm > 0.0 {
                a / norm
            } else {
                sample_coefficients(spec, d, rng)
            }
        }
        _ => DVector::from_vec(rng.unit_vector(d)),
    }
}

fn clean_samples(
    spec: &ModelSpec,
    ensemble: &SubspaceEnsemble,
    rng: &RngSpec,
) -> (DMatrix<f64>, Vec<usize>) {
    let counts = spec.counts();
    let total = counts.iter().sum();
    let mut y = DMatrix::zeros(spec.n, total);
    let mut labels = Vec::with_capacity(total);
    let mut col = 0;
    for (l, &count) in counts.iter().enumerate() {
        let u = ensemble.basis(l);
        let mut r = rng.child(1 + l as u64).rng();
        for _ in 0..count {
            let a = sample_coefficients(spec, u.ncols(), &mut r);
            let mut v = u * a;
            // exact unit norm after the basis product
            let norm = v.norm();
            v /= norm;
            y.set_column(col, &v);
            labels.push(l);
            col += 1;
        }
    }
    (y, labels)
}

/// Direction of the closest clean point (up to sign) outside subspace
/// `label`, with its component inside that subspace removed.
fn toward_nearest_other(
    y: &DMatrix<f64>,
    labels: &[usize],
    basis: &DMatrix<f64>,
    i: usize,
) -> Option<DVector<f64>> {
    let yi = y.column(i);
    let (mut best, mut best_dot) = (None, f64::NEG_INFINITY);
    for j in (0..y.ncols()).filter(|&j| labels[j] != labels[i]) {
        let dot = yi.dot(&y.column(j));
        if dot.abs() > best_dot {
            best_dot = dot.abs();
            best = Some(if dot >= 0.0 {
                y.column(j).into_owned()
            } else {
                -y.column(j)
            });
        }
    }
    let target = best?;
    let off = &target - basis * basis.tr_mul(&target);
    let norm = off.norm();
    (norm > 1e-12).then(|| off / norm)
}

fn noise_matrix(
    spec: &ModelSpec,
    y: &DMatrix<f64>,
    labels: &[usize],
    ensemble: &SubspaceEnsemble,
    rng: &RngSpec,
) -> DMatrix<f64> {
    let (n, total) = y.shape();
    let mut z = DMatrix::zeros(n, total);
    match spec.noise {
        Noise::None => {}
        Noise::Gaussian { sigma } => {
            let scale = sigma / (n as f64).sqrt();
            for i in 0..total {
                let mut r = rng.child(1000).child(i as u64).rng();
                for k in 0..n {
                    z[(k, i)] = scale * r.normal();
                }
            }
        }
        Noise::Adversarial { delta, policy } => {
            for i in 0..total {
                let mut r = rng.child(1000).child(i as u64).rng();
                let dir = match policy {
                    AdversarialPolicy::TowardNearestOtherSubspace => {
                        toward_nearest_other(y, labels, ensemble.basis(labels[i]), i)
                    }
                    AdversarialPolicy::RandomFixedNorm => None,
                }
                .unwrap_or_else(|| DVector::from_vec(r.unit_vector(n)));
                z.set_column(i, &(dir * delta));
            }
        }
    }
    z
}

/// Draws one dataset. With zero noise the data matrix equals the clean one
/// bit for bit.
pub fn generate(spec: &ModelSpec, rng: &RngSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let ensemble = build_ensemble(spec, rng)?;
    let (y, labels) = clean_samples(spec, &ensemble, rng);
    let x = if spec.noise.is_zero() {
        y.clone()
    } else {
        let mut x = &y + noise_matrix(spec, &y, &labels, &ensemble, rng);
        if spec.normalize_noisy {
            for mut c in x.column_iter_mut() {
                let norm = c.norm();
                if norm > 0.0 {
                    c /= norm;
                }
            }
        }
        x
    };
    LabeledDataset::new(
        DataMatrix::new(x)?,
        labels,
        Some(DataMatrix::new(y)?),
        Some(ensemble),
    )
}

/// What was generated, written next to the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSpec {
    pub spec: ModelSpec,
    pub rng: RngSpec,
    pub n: usize,
    pub samples: usize,
    pub subspaces: usize,
    /// `max_i ||x_i - y_i||`.
    pub measured_delta: f64,
}

/// `max_i ||x_i - y_i||`, or 0 without clean data.
pub fn measured_delta(dataset: &LabeledDataset) -> f64 {
    dataset.clean.as_ref().map_or(0.0, |y| {
        (dataset.data.values() - y.values())
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    })
}

/// Writes `data.csv`, `clean.csv`, `labels.txt`, `ensemble.json` and
/// `spec.json` into `dir`, creating it if needed.
pub fn write_dataset(
    dir: &Path,
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    rng: &RngSpec,
) -> Result<GeneratedSpec> {
    std::fs::create_dir_all(dir).map_err(|e| SscError::io(dir, e))?;
    write_data_matrix(&dir.join("data.csv"), &dataset.data)?;
    if let Some(y) = &dataset.clean {
        write_data_matrix(&dir.join("clean.csv"), y)?;
    }
    write_labels(&dir.join("labels.txt"), &dataset.labels)?;
    if let Some(e) = &dataset.ensemble {
        write_ensemble(&dir.join("ensemble.json"), e)?;
    }
    let summary = GeneratedSpec {
        spec: spec.clone(),
        rng: rng.clone(),
        n: dataset.data.n(),
        samples: dataset.data.len(),
        subspaces: dataset.num_subspaces(),
        measured_delta: measured_delta(dataset),
    };
    write_json(&dir.join("spec.json"), &summary)?;
    Ok(summary)
}
