//! Generalized Extreme Value distribution.
//!
//! CDF: `F(x) = exp(-(1 + ξ(x-μ)/σ)^(-1/ξ))` for ξ ≠ 0 and
//! `F(x) = exp(-exp(-(x-μ)/σ))` for ξ = 0, defined on the support
//! `{x : σ + ξ(x-μ) > 0}`.
//!
//! All evaluation routines switch to the Gumbel branch when `|ξ| < 1e-12` and
//! otherwise go through `ln_1p`/`expm1`, so they stay accurate as ξ → 0.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

/// Open band `(-XI_LIMIT, XI_LIMIT)` of shape values accepted by the
/// estimation workflows.
pub const XI_LIMIT: f64 = 0.5;

/// Below this magnitude of ξ the Gumbel formulas are used.
pub const GUMBEL_THRESHOLD: f64 = 1e-12;

/// Location, scale and shape of one GEV distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    mu: f64,
    sigma: f64,
    xi: f64,
}

impl GevParams {
    /// Validated constructor: finite values, `sigma > 0`, `|xi| < 0.5`.
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && xi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite parameters (mu={mu}, sigma={sigma}, xi={xi})"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma must be > 0, got {sigma}"
            )));
        }
        if xi.abs() >= XI_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "xi must lie in (-{XI_LIMIT}, {XI_LIMIT}), got {xi}"
            )));
        }
        Ok(Self { mu, sigma, xi })
    }

    /// Constructor without the shape band, for evaluating the distribution
    /// outside the estimation range. The caller guarantees `sigma > 0`.
    pub fn new_unchecked(mu: f64, sigma: f64, xi: f64) -> Self {
        debug_assert!(!(sigma <= 0.0), "sigma must be positive");
        Self { mu, sigma, xi }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.mu, self.sigma, self.xi]
    }

    fn is_gumbel(&self) -> bool {
        self.xi.abs() < GUMBEL_THRESHOLD
    }

    /// Whether `x` lies in the support, i.e. `σ + ξ(x − μ) > 0`.
    pub fn support_contains(&self, x: f64) -> bool {
        self.sigma + self.xi * (x - self.mu) > 0.0
    }

    /// Lower and upper support endpoints (infinite where unbounded).
    pub fn support(&self) -> (f64, f64) {
        if self.is_gumbel() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else if self.xi > 0.0 {
            (self.mu - self.sigma / self.xi, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, self.mu - self.sigma / self.xi)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        if self.is_gumbel() {
            return (-(-z).exp()).exp();
        }
        let arg = self.xi * z;
        if arg <= -1.0 {
            // outside the support: below the lower endpoint (ξ > 0) or above
            // the upper endpoint (ξ < 0)
            return if self.xi > 0.0 { 0.0 } else { 1.0 };
        }
        let t = (-arg.ln_1p() / self.xi).exp();
        (-t).exp()
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        if self.is_gumbel() {
            return -self.sigma.ln() - z - (-z).exp();
        }
        let arg = self.xi * z;
        if arg <= -1.0 {
            return f64::NEG_INFINITY;
        }
        let log_base = arg.ln_1p();
        -self.sigma.ln() - (1.0 + 1.0 / self.xi) * log_base - (-log_base / self.xi).exp()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Inverse CDF for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "quantile probability must be in (0, 1), got {p}"
            )));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        self.mu + self.sigma * standard_quantile(self.xi, p)
    }

    /// Level exceeded on average once every `period` blocks: the
    /// `1 − 1/period` quantile.
    pub fn return_level(&self, period: f64) -> Result<f64> {
        if !(period > 1.0) || period.is_infinite() {
            return Err(Error::Domain(format!(
                "return period must be > 1, got {period}"
            )));
        }
        Ok(self.quantile_unchecked(1.0 - 1.0 / period))
    }

    /// Draw `n` values by inverse transform from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<GevSample> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let values = (0..n)
            .map(|_| self.quantile_unchecked(rng.sample(Open01)))
            .collect();
        Ok(GevSample { values })
    }

    /// Draw `n` values from the stream identified by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<GevSample> {
        let mut rng: StreamRng = stream_rng(seed, 0);
        self.sample_with(n, &mut rng)
    }

    /// `−Σ ln f(yᵢ)`, or `+inf` if any observation is outside the support.
    pub fn neg_log_likelihood(&self, values: &[f64]) -> f64 {
        let ln_sigma = self.sigma.ln();
        let mut total = values.len() as f64 * ln_sigma;
        if self.is_gumbel() {
            for &y in values {
                let z = (y - self.mu) / self.sigma;
                total += z + (-z).exp();
            }
            return total;
        }
        let inv_xi = 1.0 / self.xi;
        for &y in values {
            let arg = self.xi * (y - self.mu) / self.sigma;
            if arg <= -1.0 {
                return f64::INFINITY;
            }
            let log_base = arg.ln_1p();
            total += (1.0 + inv_xi) * log_base + (-log_base * inv_xi).exp();
        }
        total
    }
}

/// Quantile of GEV(0, 1, ξ).
fn standard_quantile(xi: f64, p: f64) -> f64 {
    let log_log = (-p.ln()).ln();
    if xi.abs() < GUMBEL_THRESHOLD {
        -log_log
    } else {
        (-xi * log_log).exp_m1() / xi
    }
}

/// An observed (or simulated) sample of block maxima, in observation order.
#[derive(Debug, Clone, PartialEq)]
pub struct GevSample {
    values: Vec<f64>,
}

impl GevSample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain(
                "sample must contain at least one value".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "sample contains non-finite value {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `a·y + b` elementwise.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|y| a * y + b).collect())
    }
}
