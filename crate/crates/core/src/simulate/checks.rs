//! Monte-Carlo estimates of two concentration bounds: the area of a
//! spherical cap and the norm of a Gaussian noise vector.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};
use crate::rng::RngSpec;

const MIN_TRIALS: usize = 1000;

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(SscError::InvalidInput(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapCheck {
    /// Fraction of draws with `|a^T z| > eps ||z||`.
    pub rate: f64,
    /// `2 exp(-n eps^2 / 2)`.
    pub bound: f64,
    /// Binomial standard deviation at the bound.
    pub sigma_binomial: f64,
}

impl CapCheck {
    /// `rate <= bound + k sigma_binomial`.
    pub fn within(&self, k: f64) -> bool {
        self.rate <= self.bound + k * self.sigma_binomial
    }
}

/// Draws uniform unit vectors `a` in `R^n` against the fixed `z = e_1`.
pub fn spherical_cap_check(n: usize, trials: usize, eps: f64, rng: &RngSpec) -> Result<CapCheck> {
    check_trials(trials)?;
    if n == 0 || !(eps >= 0.0) {
        return Err(SscError::InvalidInput("need n >= 1 and eps >= 0".into()));
    }
    let mut r = rng.rng();
    let hits = (0..trials)
        .filter(|_| r.unit_vector(n)[0].abs() > eps)
        .count();
    let bound = 2.0 * (-(n as f64) * eps * eps / 2.0).exp();
    let p = bound.min(1.0);
    Ok(CapCheck {
        rate: hits as f64 / trials as f64,
        bound,
        sigma_binomial: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCheck {
    /// `6 log N / n`.
    pub t: f64,
    /// Fraction of draws with `||z||^2 > (1 + t) sigma^2`.
    pub rate: f64,
    /// `exp((n/2)(log(1 + t) - t))`.
    pub bound: f64,
    pub sigma_binomial: f64,
    /// Sample mean of `||z||^2`.
    pub mean_sq: f64,
    /// Standard error of that mean, `sqrt(2/n) sigma^2 / sqrt(trials)`.
    pub mean_sq_stderr: f64,
}

impl NormCheck {
    pub fn within(&self, k: f64) -> bool {
        self.rate <= self.bound + k * self.sigma_binomial
    }
}

/// Draws `z` with iid `N(0, sigma^2 / n)` entries.
pub fn gaussian_norm_check(
    n: usize,
    big_n: usize,
    sigma: f64,
    trials: usize,
    rng: &RngSpec,
) -> Result<NormCheck> {
    check_trials(trials)?;
    if n == 0 || big_n < 2 || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(SscError::InvalidInput(
            "need n >= 1, N >= 2 and sigma >= 0".into(),
        ));
    }
    let nf = n as f64;
    let t = 6.0 * (big_n as f64).ln() / nf;
    let threshold = (1.0 + t) * sigma * sigma;
    let scale = sigma / nf.sqrt();
    let mut r = rng.rng();
    let mut hits = 0usize;
    let mut sum = 0.0;
    for _ in 0..trials {
        let sq: f64 = (0..n).map(|_| (scale * r.normal()).powi(2)).sum();
        sum += sq;
        if sq > threshold {
            hits += 1;
        }
    }
    let bound = ((nf / 2.0) * ((1.0 + t).ln() - t)).exp();
    let p = bound.min(1.0);
    Ok(NormCheck {
        t,
        rate: hits as f64 / trials as f64,
        bound,
        sigma_binomial: (p * (1.0 - p) / trials as f64).sqrt(),
        mean_sq: sum / trials as f64,
        mean_sq_stderr: (2.0 / nf).sqrt() * sigma * sigma / (trials as f64).sqrt(),
    })
}
