//! Parametric bootstrap intervals with the network as the refitting engine.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gev::GevParams;
use crate::nn::NetworkModel;
use crate::rng::stream_rng;
use crate::summaries::percentile_sorted;
use crate::training::{predict_summaries, simulate_record, MIN_ESTIMATION_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    BootstrapNn,
    Likelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
    /// Number of bootstrap replicates, if bootstrapped.
    pub replicates: Option<usize>,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// Intervals for `(μ, σ, ξ)`.
    pub intervals: [ConfidenceInterval; 3],
    /// One row per replicate.
    pub replicates: Vec<[f64; 3]>,
    /// Degenerate bootstrap samples that had to be drawn again.
    pub redraws: usize,
}

/// Type-7 percentile intervals from an already computed replicate matrix.
pub fn percentile_intervals(
    replicates: &[[f64; 3]],
    level: f64,
) -> Result<[ConfidenceInterval; 3]> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    if replicates.len() < 2 {
        return Err(Error::Domain("need at least 2 replicates".into()));
    }
    let alpha = 0.5 * (1.0 - level);
    let mut out = [ConfidenceInterval {
        lower: 0.0,
        upper: 0.0,
        level,
        method: IntervalMethod::BootstrapNn,
        replicates: Some(replicates.len()),
    }; 3];
    for (k, ci) in out.iter_mut().enumerate() {
        let mut col: Vec<f64> = replicates.iter().map(|r| r[k]).collect();
        col.sort_by(f64::total_cmp);
        ci.lower = percentile_sorted(&col, alpha);
        ci.upper = percentile_sorted(&col, 1.0 - alpha);
    }
    Ok(out)
}

/// Draw `b` samples of size `n` from `theta_hat`, estimate each with `model`,
/// and take percentile intervals of the estimates. Replicate `i` uses stream
/// `i` of `seed`.
pub fn parametric_bootstrap(
    model: &NetworkModel,
    theta_hat: &GevParams,
    n: usize,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult> {
    if n < MIN_ESTIMATION_SIZE {
        return Err(Error::Domain(format!(
            "bootstrap sample size {n} is below {MIN_ESTIMATION_SIZE}"
        )));
    }
    if b < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 bootstrap replicates, got {b}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let theta_hat = GevParams::new(theta_hat.mu(), theta_hat.sigma(), theta_hat.xi())?;
    let mut summaries = Vec::with_capacity(b);
    let mut redraws = 0;
    for i in 0..b {
        let mut rng = stream_rng(seed, i as u64);
        let (rec, r) = simulate_record(&theta_hat, n, model.percentile_set(), &mut rng)?;
        redraws += r;
        summaries.push(rec.summary);
    }
    let replicates: Vec<[f64; 3]> = predict_summaries(model, &summaries)
        .iter()
        .map(GevParams::to_array)
        .collect();
    let intervals = percentile_intervals(&replicates, level)?;
    Ok(BootstrapResult {
        intervals,
        replicates,
        redraws,
    })
}

/// Bootstrap width over likelihood width.
pub fn ci_width_ratio(
    bootstrap: &ConfidenceInterval,
    likelihood: &ConfidenceInterval,
) -> Result<f64> {
    let wl = likelihood.width();
    if !(wl > 0.0) || !wl.is_finite() {
        return Err(Error::UndefinedRatio);
    }
    Ok(bootstrap.width() / wl)
}
