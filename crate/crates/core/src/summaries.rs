//! Percentile summaries and mean/IQR standardization.
//!
//! Empirical percentiles use linear interpolation between order statistics at
//! rank `h = (n − 1)p + 1` (the "type 7" convention). Samples are standardized
//! as `z = (y − ȳ)/IQR` before summarizing, which makes the summary invariant
//! to affine changes of units; [`StandardizationInfo`] carries the mean and IQR
//! needed to map parameters between the two scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gev::{GevParams, GevSample};

pub const PERCENTILE_COUNT: usize = 11;

const STANDARD_PROBS: [f64; PERCENTILE_COUNT] = [
    0.0001, 0.001, 0.01, 0.10, 0.25, 0.50, 0.75, 0.90, 0.99, 0.999, 0.9999,
];

/// The probabilities at which the network input percentiles are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PercentileSet([f64; PERCENTILE_COUNT]);

impl PercentileSet {
    /// 0.01th through 99.99th percentiles, extreme tails plus quartiles.
    pub fn standard() -> Self {
        Self(STANDARD_PROBS)
    }

    pub fn new(probs: [f64; PERCENTILE_COUNT]) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter(
                "percentile probabilities must lie in [0, 1]".into(),
            ));
        }
        if probs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "percentile probabilities must be strictly increasing".into(),
            ));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64; PERCENTILE_COUNT] {
        &self.0
    }
}

impl Default for PercentileSet {
    fn default() -> Self {
        Self::standard()
    }
}

impl TryFrom<Vec<f64>> for PercentileSet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let probs: [f64; PERCENTILE_COUNT] = v.try_into().map_err(|v: Vec<f64>| {
            Error::InvalidParameter(format!(
                "expected {PERCENTILE_COUNT} percentile probabilities, got {}",
                v.len()
            ))
        })?;
        Self::new(probs)
    }
}

impl From<PercentileSet> for Vec<f64> {
    fn from(p: PercentileSet) -> Self {
        p.0.to_vec()
    }
}

/// Type-7 percentile of an already sorted, nonempty slice.
pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Type-7 empirical percentile of `values` at probability `p ∈ [0, 1]`.
pub fn empirical_percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("percentile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "percentile probability must be in [0, 1], got {p}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

/// Sample mean and interquartile range used for standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationInfo {
    mean: f64,
    iqr: f64,
}

impl StandardizationInfo {
    pub fn new(mean: f64, iqr: f64) -> Result<Self> {
        if !mean.is_finite() || !(iqr > 0.0 && iqr.is_finite()) {
            return Err(Error::DegenerateSample(format!(
                "standardization needs a finite mean and a positive IQR (mean={mean}, iqr={iqr})"
            )));
        }
        Ok(Self { mean, iqr })
    }

    pub fn identity() -> Self {
        Self {
            mean: 0.0,
            iqr: 1.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn iqr(&self) -> f64 {
        self.iqr
    }

    /// `((μ − ȳ)/IQR, σ/IQR, ξ)`.
    pub fn standardize_params(&self, params: &GevParams) -> GevParams {
        GevParams::new_unchecked(
            (params.mu() - self.mean) / self.iqr,
            params.sigma() / self.iqr,
            params.xi(),
        )
    }

    /// `(μ'·IQR + ȳ, σ'·IQR, ξ')`.
    pub fn destandardize_params(&self, params: &GevParams) -> GevParams {
        GevParams::new_unchecked(
            params.mu() * self.iqr + self.mean,
            params.sigma() * self.iqr,
            params.xi(),
        )
    }
}

fn info_from_sorted(sorted: &[f64]) -> Result<StandardizationInfo> {
    let n = sorted.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let iqr = percentile_sorted(sorted, 0.75) - percentile_sorted(sorted, 0.25);
    let scale = sorted[0].abs().max(sorted[n - 1].abs());
    if !(iqr > 4.0 * f64::EPSILON * scale) {
        return Err(Error::DegenerateSample(format!(
            "interquartile range {iqr} is zero or negligible"
        )));
    }
    StandardizationInfo::new(mean, iqr)
}

/// `zᵢ = (yᵢ − ȳ)/IQR`, keeping observation order.
pub fn standardize(sample: &GevSample) -> Result<(GevSample, StandardizationInfo)> {
    let mut sorted = sample.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let info = info_from_sorted(&sorted)?;
    let z = sample
        .values()
        .iter()
        .map(|y| (y - info.mean) / info.iqr)
        .collect();
    Ok((GevSample::new(z)?, info))
}

/// Network input for one sample: standardized percentiles, plus the
/// standardized extremes needed to check the support constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSummary {
    pub percentiles: [f64; PERCENTILE_COUNT],
    pub sample_min: f64,
    pub sample_max: f64,
    pub info: StandardizationInfo,
    pub n: usize,
}

/// Standardize `sample` and evaluate `pset` on the standardized values.
pub fn summarize(sample: &GevSample, pset: &PercentileSet) -> Result<QuantileSummary> {
    let mut sorted = sample.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let info = info_from_sorted(&sorted)?;
    for y in sorted.iter_mut() {
        *y = (*y - info.mean) / info.iqr;
    }
    let mut percentiles = [0.0; PERCENTILE_COUNT];
    for (slot, &p) in percentiles.iter_mut().zip(pset.probs()) {
        *slot = percentile_sorted(&sorted, p);
    }
    Ok(QuantileSummary {
        percentiles,
        sample_min: sorted[0],
        sample_max: sorted[sorted.len() - 1],
        info,
        n: sorted.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(v: &[f64]) -> GevSample {
        GevSample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(
            empirical_percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(),
            3.0
        );
        assert_eq!(
            empirical_percentile(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(),
            2.5
        );
        let v = empirical_percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0001).unwrap();
        assert!((v - 1.0004).abs() < 1e-12);
        assert_eq!(empirical_percentile(&[3.0, 1.0, 2.0], 0.0).unwrap(), 1.0);
        assert_eq!(empirical_percentile(&[3.0, 1.0, 2.0], 1.0).unwrap(), 3.0);
        assert!(empirical_percentile(&[], 0.5).is_err());
        assert!(empirical_percentile(&[1.0], 1.5).is_err());
    }

    #[test]
    fn standardize_examples() {
        let (z, info) = standardize(&sample(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(info.mean(), 3.0);
        assert_eq!(info.iqr(), 2.0);
        assert_eq!(z.values(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);

        let y = sample(&[0.3, 2.9, -1.2, 4.4, 0.8, 7.5]);
        let (z1, _) = standardize(&y).unwrap();
        let (z2, _) = standardize(&y.affine(2.0, 3.0).unwrap()).unwrap();
        for (a, b) in z1.values().iter().zip(z2.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(matches!(
            standardize(&sample(&[5.0, 5.0, 5.0])),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn param_transform_examples() {
        let info = StandardizationInfo::new(10.0, 2.0).unwrap();
        let std = info.standardize_params(&GevParams::new(12.0, 2.0, 0.1).unwrap());
        assert_eq!(std.to_array(), [1.0, 1.0, 0.1]);
        assert_eq!(info.destandardize_params(&std).to_array(), [12.0, 2.0, 0.1]);

        let back = StandardizationInfo::new(3.0, 2.0)
            .unwrap()
            .destandardize_params(&GevParams::new_unchecked(0.0, 0.5, -0.2));
        assert_eq!(back.to_array(), [3.0, 1.0, -0.2]);

        let id = StandardizationInfo::identity();
        let theta = GevParams::new(4.2, 1.3, -0.3).unwrap();
        assert_eq!(id.standardize_params(&theta), theta);
        assert_eq!(id.destandardize_params(&theta), theta);
        assert!(StandardizationInfo::new(0.0, 0.0).is_err());
    }

    #[test]
    fn summarize_small_sample() {
        let s = summarize(
            &sample(&[1.0, 2.0, 3.0, 4.0, 5.0]),
            &PercentileSet::standard(),
        )
        .unwrap();
        assert_eq!(s.percentiles.len(), 11);
        assert_eq!(s.percentiles[5], 0.0);
        assert_eq!(s.sample_min, -1.0);
        assert_eq!(s.sample_max, 1.0);
        assert!(s.percentiles.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn summarize_power_of_two_scaling_is_bit_exact() {
        let y = GevParams::new(3.0, 2.0, 0.2)
            .unwrap()
            .sample(500, 4)
            .unwrap();
        let pset = PercentileSet::standard();
        let a = summarize(&y, &pset).unwrap();
        let b = summarize(&y.affine(4.0, 0.0).unwrap(), &pset).unwrap();
        assert_eq!(a.percentiles, b.percentiles);
        assert_eq!(b.info.mean(), 4.0 * a.info.mean());
        assert_eq!(b.info.iqr(), 4.0 * a.info.iqr());
    }

    #[test]
    fn percentile_set_validation() {
        let mut probs = STANDARD_PROBS;
        probs.swap(0, 1);
        assert!(PercentileSet::new(probs).is_err());
        assert!(PercentileSet::try_from(vec![0.5; 3]).is_err());
        assert_eq!(
            PercentileSet::try_from(STANDARD_PROBS.to_vec()).unwrap(),
            PercentileSet::standard()
        );
    }

    proptest! {
        #[test]
        fn percentile_is_monotone(values in prop::collection::vec(-1e3f64..1e3, 1..60),
                                  p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(empirical_percentile(&values, lo).unwrap() <= empirical_percentile(&values, hi).unwrap());
        }

        #[test]
        fn summary_is_affine_invariant(values in prop::collection::vec(-50f64..50.0, 8..80),
                                       a in 0.01f64..100.0, b in -1e3f64..1e3) {
            let y = GevSample::new(values).unwrap();
            let pset = PercentileSet::standard();
            let Ok(base) = summarize(&y, &pset) else { return Ok(()); };
            let moved = summarize(&y.affine(a, b).unwrap(), &pset).unwrap();
            for (u, v) in base.percentiles.iter().zip(&moved.percentiles) {
                prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
            }
            prop_assert!((moved.info.mean() - (a * base.info.mean() + b)).abs() <= 1e-9 * (1.0 + moved.info.mean().abs()));
            prop_assert!((moved.info.iqr() - a * base.info.iqr()).abs() <= 1e-9 * moved.info.iqr());
        }

        #[test]
        fn param_round_trip(mu in -100f64..100.0, sigma in 0.01f64..50.0, xi in -0.49f64..0.49,
                            mean in -100f64..100.0, iqr in 0.01f64..50.0) {
            let info = StandardizationInfo::new(mean, iqr).unwrap();
            let theta = GevParams::new(mu, sigma, xi).unwrap();
            let back = info.destandardize_params(&info.standardize_params(&theta));
            prop_assert!((back.mu() - mu).abs() <= 1e-12 * (1.0 + mu.abs() + mean.abs()));
            prop_assert!((back.sigma() - sigma).abs() <= 1e-12 * sigma);
            prop_assert_eq!(back.xi(), xi);
        }
    }
}
