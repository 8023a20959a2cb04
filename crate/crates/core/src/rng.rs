//! Deterministic random streams.
//!
//! Every random draw in the crate goes through [`PortableRng`], a ChaCha8
//! counter-based generator keyed by a 64-bit seed. Child streams are derived
//! from a master seed and a path of stream ids with a SplitMix64 fold, so a
//! grid cell or a k-means restart gets the same numbers no matter which
//! worker runs it or in which order.
//!
//! Uniforms use the top 53 bits of a `u64`; normals use Box–Muller with the
//! second variate cached.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A master seed plus a derivation path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    #[serde(default)]
    pub stream_id: Vec<u64>,
}

impl RngSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_id: Vec::new(),
        }
    }

    /// Extends the derivation path by one component.
    pub fn child(&self, id: u64) -> Self {
        let mut stream_id = self.stream_id.clone();
        stream_id.push(id);
        Self {
            master_seed: self.master_seed,
            stream_id,
        }
    }

    /// `hash(master_seed, stream_id)`.
    pub fn derived_seed(&self) -> u64 {
        let mut h = splitmix64(self.master_seed);
        for (depth, &id) in self.stream_id.iter().enumerate() {
            h = splitmix64(
                h ^ splitmix64(id.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN))),
            );
        }
        h
    }

    pub fn rng(&self) -> PortableRng {
        PortableRng::from_seed_u64(self.derived_seed())
    }
}

#[derive(Debug, Clone)]
pub struct PortableRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl PortableRng {
    pub fn from_seed_u64(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(key),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`; `bound` must be positive.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.uniform() * bound as f64) as usize).min(bound - 1)
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping ln finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    /// Uniform direction on the unit sphere in `R^dim` (normalized Gaussian).
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let mut v = self.normal_vec(dim);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-300 {
                v.iter_mut().for_each(|x| *x /= norm);
                return v;
            }
        }
    }
}
