//! Sufficient conditions and admissible ranges of lambda.
//!
//! Each function evaluates one guarantee from measured or assumed geometric
//! quantities. Ranges are open intervals `(lower, upper)`; an unbounded
//! upper end is an explicit flag, and a lower end whose denominator is not
//! positive is reported as undefined (the range is then empty).

mod semirandom;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SscError};
use crate::geometry::GeometryReport;

pub use semirandom::{semirandom_advisory, SemirandomAdvisory, SemirandomParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    Deterministic,
    RandomNoise,
    FullyRandom,
}

/// Quantities a range was computed from; absent ones did not enter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputsEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub big_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRange {
    /// `None` when the lower bound's denominator is not positive.
    pub lower: Option<f64>,
    /// Finite upper bound; `None` exactly when `unbounded_above`.
    pub upper: Option<f64>,
    pub unbounded_above: bool,
    pub nonempty: bool,
    pub theorem: Guarantee,
    pub inputs_echo: InputsEcho,
}

impl LambdaRange {
    fn new(
        lower: Option<f64>,
        upper: Option<f64>,
        theorem: Guarantee,
        inputs_echo: InputsEcho,
    ) -> Self {
        let nonempty = match (lower, upper) {
            (Some(lo), Some(hi)) => lo < hi,
            (Some(_), None) => true,
            (None, _) => false,
        };
        Self {
            lower,
            upper,
            unbounded_above: upper.is_none(),
            nonempty,
            theorem,
            inputs_echo,
        }
    }

    /// Whether `lambda` lies strictly inside the range.
    pub fn contains(&self, lambda: f64) -> bool {
        match self.lower {
            Some(lo) => lambda > lo && self.upper.is_none_or(|hi| lambda < hi),
            None => false,
        }
    }

    /// Geometric mean of the endpoints; `None` for empty or unbounded ranges.
    pub fn geometric_midpoint(&self) -> Option<f64> {
        match (self.nonempty, self.lower, self.upper) {
            (true, Some(lo), Some(hi)) => Some((lo * hi).sqrt()),
            _ => None,
        }
    }
}

fn positive_reciprocal(den: f64) -> Option<f64> {
    (den > 0.0).then(|| 1.0 / den)
}

/// `rho = lambda delta (1 + delta)` at both endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoAtEndpoints {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

fn rho_at(range: &LambdaRange, delta: f64) -> RhoAtEndpoints {
    let f = |l: f64| l * delta * (1.0 + delta);
    RhoAtEndpoints {
        lower: range.lower.map(f),
        upper: range.upper.map(f),
    }
}

fn checked_geometry(report: &GeometryReport) -> Result<(f64, f64)> {
    if report.r.is_empty() || report.r.len() != report.mu.len() {
        return Err(SscError::InvalidInput(
            "report needs one r and one mu per subspace".into(),
        ));
    }
    if report.r.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(SscError::InvalidInput(
            "every r_l must be positive and finite".into(),
        ));
    }
    if report.mu.iter().any(|m| !m.is_finite()) {
        return Err(SscError::InvalidInput("mu_l must be finite".into()));
    }
    let delta = report
        .delta
        .ok_or_else(|| SscError::InvalidInput("noise magnitude delta is required".into()))?;
    let delta1 = report.delta1.unwrap_or(delta);
    if !(delta >= 0.0 && delta1 >= 0.0 && delta.is_finite() && delta1.is_finite()) {
        return Err(SscError::InvalidInput(
            "delta and delta1 must be finite and non-negative".into(),
        ));
    }
    Ok((delta, delta1))
}

fn r_min(report: &GeometryReport) -> f64 {
    report.r.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicVerdict {
    /// `min_l r (r_l - mu_l) / (2 + 7 r_l)`.
    pub delta_bound: f64,
    /// `mu_l < r_l` for all `l` and `delta <= delta_bound`.
    pub gap_ok: bool,
    pub range: LambdaRange,
    pub rho: RhoAtEndpoints,
}

/// Deterministic data, deterministic noise.
pub fn deterministic_conditions(report: &GeometryReport) -> Result<DeterministicVerdict> {
    let (delta, delta1) = checked_geometry(report)?;
    let r = r_min(report);
    let pairs = || report.r.iter().zip(&report.mu);
    let delta_bound = pairs()
        .map(|(&rl, &ml)| r * (rl - ml) / (2.0 + 7.0 * rl))
        .fold(f64::INFINITY, f64::min);
    let gap_ok = pairs().all(|(rl, ml)| ml < rl) && delta <= delta_bound;

    let lower = positive_reciprocal(r - 2.0 * delta - delta * delta);
    let upper = (delta > 0.0).then(|| {
        pairs()
            .map(|(&rl, &ml)| {
                (rl - ml - 2.0 * delta1) / (delta * (1.0 + delta) * (2.0 + rl - delta1))
            })
            .fold(f64::INFINITY, f64::min)
    });
    let echo = InputsEcho {
        r: Some(report.r.clone()),
        mu: Some(report.mu.clone()),
        delta: Some(delta),
        delta1: Some(delta1),
        ..InputsEcho::default()
    };
    let range = LambdaRange::new(lower, upper, Guarantee::Deterministic, echo);
    Ok(DeterministicVerdict {
        delta_bound,
        gap_ok,
        rho: rho_at(&range, delta),
        range,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomNoiseVerdict {
    /// `sqrt(6 log N / (n - max_l d_l))`.
    pub epsilon: f64,
    pub cond1: bool,
    pub cond2: bool,
    pub range: LambdaRange,
    pub rho: RhoAtEndpoints,
}

/// Deterministic data, random noise.
pub fn random_noise_conditions(
    report: &GeometryReport,
    n: usize,
    big_n: usize,
    dims: &[usize],
) -> Result<RandomNoiseVerdict> {
    let (delta, _) = checked_geometry(report)?;
    if dims.len() != report.r.len() {
        return Err(SscError::InvalidInput(
            "one dimension per subspace is required".into(),
        ));
    }
    let d_max = dims.iter().copied().max().unwrap_or(0);
    if n <= d_max || big_n < 2 || dims.contains(&0) {
        return Err(SscError::InvalidInput(
            "need n > max d_l >= 1 and N >= 2".into(),
        ));
    }
    let eps = (6.0 * (big_n as f64).ln() / (n - d_max) as f64).sqrt();
    let r = r_min(report);
    let triples = || {
        report
            .r
            .iter()
            .zip(&report.mu)
            .zip(dims)
            .map(|((&rl, &ml), &dl)| (rl, ml, (dl as f64).sqrt()))
    };
    let min1 = triples()
        .map(|(rl, ml, sd)| (rl - ml) / (2.0 * sd + 2.0))
        .fold(f64::INFINITY, f64::min);
    let min2 = triples()
        .map(|(rl, ml, _)| r * (rl - ml) / (4.0 * rl + 6.0))
        .fold(f64::INFINITY, f64::min);
    let ed = eps * delta;
    let cond1 = ed < min1;
    let cond2 = ed * (1.0 + delta) < min2;

    let lower = positive_reciprocal(r - 2.0 * ed - ed * delta);
    let upper = (delta > 0.0).then(|| {
        triples()
            .map(|(rl, ml, sd)| {
                (rl - ml - ed - ed * sd) / (ed * (1.0 + delta) * (3.0 + rl - ed * sd))
            })
            .fold(f64::INFINITY, f64::min)
    });
    let echo = InputsEcho {
        r: Some(report.r.clone()),
        mu: Some(report.mu.clone()),
        delta: Some(delta),
        epsilon: Some(eps),
        dims: Some(dims.to_vec()),
        n: Some(n),
        big_n: Some(big_n as f64),
        ..InputsEcho::default()
    };
    let range = LambdaRange::new(lower, upper, Guarantee::RandomNoise, echo);
    Ok(RandomNoiseVerdict {
        epsilon: eps,
        cond1,
        cond2,
        rho: rho_at(&range, delta),
        range,
    })
}

/// Absolute constants of the fully random range, which the guarantee leaves
/// unspecified; both default to 1 and the result is advisory in scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for RangeConstants {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0 }
    }
}

/// `c(kappa) = 1/sqrt(8)` for `kappa >= 2`.
pub fn c_kappa(kappa: f64) -> Result<f64> {
    if kappa >= 2.0 && kappa.is_finite() {
        Ok(1.0 / 8f64.sqrt())
    } else {
        Err(SscError::InvalidInput(format!(
            "c(kappa) is only available for kappa >= 2, got {kappa}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullyRandomVerdict {
    pub c_kappa: f64,
    /// `N = L (kappa d + 1)`.
    pub big_n: f64,
    pub dim_bound: f64,
    pub sigma_bound: f64,
    pub dim_ok: bool,
    pub sigma_ok: bool,
    pub range: LambdaRange,
    pub constants: RangeConstants,
    /// The constants are placeholders.
    pub advisory: bool,
}

/// Random subspaces, uniform samples, Gaussian noise.
pub fn fully_random_conditions(
    n: usize,
    d: usize,
    l: usize,
    kappa: f64,
    sigma: f64,
    constants: RangeConstants,
) -> Result<FullyRandomVerdict> {
    let c = c_kappa(kappa)?;
    if n == 0 || d == 0 || l == 0 || !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(SscError::InvalidInput(
            "need n, d, L >= 1 and sigma >= 0".into(),
        ));
    }
    let big_n = l as f64 * (kappa * d as f64 + 1.0);
    let (nf, df) = (n as f64, d as f64);
    let log_k = kappa.ln();
    let log_n = big_n.ln();
    let dim_bound = c * c * log_k * nf / (24.0 * log_n);
    let sigma_bound = c * c * log_k * nf.sqrt() / (20.0 * df);
    let lower = constants.c1 * df.sqrt() / (c * log_k.sqrt());
    let upper = (sigma > 0.0)
        .then(|| constants.c2 * c * (nf * log_k).sqrt() / (sigma * (df * log_n).sqrt()));
    let echo = InputsEcho {
        dims: Some(vec![d; l]),
        n: Some(n),
        big_n: Some(big_n),
        sigma: Some(sigma),
        kappa: Some(kappa),
        ..InputsEcho::default()
    };
    Ok(FullyRandomVerdict {
        c_kappa: c,
        big_n,
        dim_bound,
        sigma_bound,
        dim_ok: df < dim_bound,
        sigma_ok: sigma * (1.0 + sigma) < sigma_bound,
        range: LambdaRange::new(Some(lower), upper, Guarantee::FullyRandom, echo),
        constants,
        advisory: true,
    })
}

/// All verdicts for one geometry report, as emitted by diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub deterministic: DeterministicVerdict,
    pub random_noise: RandomNoiseVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fully_random: Option<FullyRandomVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semirandom: Option<SemirandomAdvisory>,
}

/// Every verdict that applies to `report`. The fully random verdict needs
/// equal dimensions and counts with `kappa >= 2` plus a noise level; the
/// semi-random advisory needs `L >= 2` and `kappa_l > 1`.
pub fn assess(
    report: &GeometryReport,
    n: usize,
    counts: &[usize],
    sigma: Option<f64>,
    t: f64,
    constants: RangeConstants,
) -> Result<TheoryReport> {
    let dims = &report.dims;
    if counts.len() != dims.len() {
        return Err(SscError::InvalidInput(
            "one count per subspace is required".into(),
        ));
    }
    let big_n: usize = counts.iter().sum();
    let deterministic = deterministic_conditions(report)?;
    let random_noise = random_noise_conditions(report, n, big_n, dims)?;
    let uniform = dims.windows(2).all(|w| w[0] == w[1]) && counts.windows(2).all(|w| w[0] == w[1]);
    let fully_random = match (uniform, sigma) {
        (true, Some(s)) => {
            let kappa = counts[0] as f64 / dims[0] as f64;
            (kappa >= 2.0)
                .then(|| fully_random_conditions(n, dims[0], dims.len(), kappa, s, constants))
                .transpose()?
        }
        _ => None,
    };
    let semirandom = semirandom_advisory(
        report,
        &SemirandomParams {
            n,
            counts: counts.to_vec(),
            dims: dims.clone(),
            t,
        },
    )
    .ok();
    Ok(TheoryReport {
        deterministic,
        random_noise,
        fully_random,
        semirandom,
    })
}
