//! Noisy sparse subspace clustering.
//!
//! Each sample is written as a sparse combination of the other samples by a
//! LASSO program; the coefficients feed a spectral clustering step. Alongside
//! the pipeline the crate computes the geometric quantities that govern when
//! the representation stays inside each subspace (inradius, projected
//! incoherence, subspace affinity, noise level), turns them into admissible
//! ranges of the tradeoff parameter, and runs seeded phase-transition grids.

pub mod cluster;
pub mod data;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod rng;
pub mod simulate;
pub mod solver;
pub mod theory;

pub use data::{
    normalize_columns, orthonormalize, project_onto, soft_threshold, CoefficientMatrix, DataMatrix,
    LabeledDataset, SubspaceEnsemble,
};
pub use error::{Result, SscError};
pub use rng::{PortableRng, RngSpec};
