//! Simulation studies comparing the network with the likelihood baseline:
//! deviations from the truth, MSE over a (σ, ξ) grid, interval widths and
//! coverage, and wall-clock timing.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{ci_width_ratio, parametric_bootstrap};
use crate::error::{Error, Result};
use crate::gev::{GevParams, GevSample};
use crate::mle::{fit_mle, mle_confidence_intervals};
use crate::nn::NetworkModel;
use crate::rng::{derive_seed, stream_rng};
use crate::summaries::percentile_sorted;
use crate::training::{estimate_batch, sample_parameter_configs, ParameterRanges};

/// Sample size of every test case in the deviation, interval and timing studies.
pub const TEST_SAMPLE_SIZE: usize = 1000;

const DOMAIN_TRUTHS: u64 = 10;
const DOMAIN_SAMPLES: u64 = 11;
const DOMAIN_BOOTSTRAP: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Nn,
    Mle,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Nn => "nn",
            Estimator::Mle => "mle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Mu,
    Sigma,
    LogSigma,
    Xi,
}

/// Median and interquartile range (type-7) of `values`. NaN for an empty slice.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (
        percentile_sorted(&v, 0.5),
        percentile_sorted(&v, 0.75) - percentile_sorted(&v, 0.25),
    )
}

fn simulate_cases(count: usize, n: usize, seed: u64) -> Result<(Vec<GevParams>, Vec<GevSample>)> {
    let truths = sample_parameter_configs(
        count,
        &ParameterRanges::default(),
        derive_seed(seed, DOMAIN_TRUTHS),
    )?;
    let sample_seed = derive_seed(seed, DOMAIN_SAMPLES);
    let samples = truths
        .iter()
        .enumerate()
        .map(|(i, t)| t.sample_with(n, &mut stream_rng(sample_seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok((truths, samples))
}

/// One estimator's error on one parameter of one test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub case: usize,
    pub estimator: Estimator,
    pub parameter: Parameter,
    pub truth: f64,
    pub estimate: f64,
    /// `μ̂ − μ`, `ln σ̂ − ln σ`, or `ξ̂ − ξ`.
    pub deviation: f64,
    /// As `deviation`, with the μ error divided by the true σ.
    pub scaled_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub estimator: Estimator,
    pub parameter: Parameter,
    pub count: usize,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeviationReport {
    pub rows: Vec<DeviationRow>,
    /// Test cases whose likelihood fit did not converge.
    pub mle_exclusions: usize,
}

impl DeviationReport {
    pub fn scaled(&self, estimator: Estimator, parameter: Parameter) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator && r.parameter == parameter)
            .map(|r| r.scaled_deviation)
            .collect()
    }

    /// Median and IQR of the scaled deviations per estimator and parameter.
    pub fn summary(&self) -> Vec<DeviationSummary> {
        let mut out = Vec::new();
        for estimator in [Estimator::Nn, Estimator::Mle] {
            for parameter in [Parameter::Mu, Parameter::LogSigma, Parameter::Xi] {
                let v = self.scaled(estimator, parameter);
                let (median, iqr) = median_iqr(&v);
                out.push(DeviationSummary {
                    estimator,
                    parameter,
                    count: v.len(),
                    median,
                    iqr,
                });
            }
        }
        out
    }
}

fn deviation_rows(
    case: usize,
    estimator: Estimator,
    truth: &GevParams,
    est: &GevParams,
) -> [DeviationRow; 3] {
    let row = |parameter, truth, estimate, deviation, scaled_deviation| DeviationRow {
        case,
        estimator,
        parameter,
        truth,
        estimate,
        deviation,
        scaled_deviation,
    };
    let dmu = est.mu() - truth.mu();
    let dls = est.sigma().ln() - truth.sigma().ln();
    let dxi = est.xi() - truth.xi();
    [
        row(
            Parameter::Mu,
            truth.mu(),
            est.mu(),
            dmu,
            dmu / truth.sigma(),
        ),
        row(
            Parameter::LogSigma,
            truth.sigma().ln(),
            est.sigma().ln(),
            dls,
            dls,
        ),
        row(Parameter::Xi, truth.xi(), est.xi(), dxi, dxi),
    ]
}

/// Estimate `n_test` random configurations (samples of size 1000) with both
/// estimators and record their deviations.
pub fn deviation_study(model: &NetworkModel, n_test: usize, seed: u64) -> Result<DeviationReport> {
    let (truths, samples) = simulate_cases(n_test, TEST_SAMPLE_SIZE, seed)?;
    let nn = estimate_batch(model, &samples)?;
    let mut report = DeviationReport::default();
    for (i, ((truth, sample), est)) in truths.iter().zip(&samples).zip(&nn).enumerate() {
        report
            .rows
            .extend(deviation_rows(i, Estimator::Nn, truth, est));
        let fit = fit_mle(sample)?;
        if fit.converged {
            report
                .rows
                .extend(deviation_rows(i, Estimator::Mle, truth, &fit.params));
        } else {
            report.mle_exclusions += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub sigma_axis: Vec<f64>,
    pub xi_axis: Vec<f64>,
    pub mu: f64,
    pub replications: usize,
    pub sizes: Vec<usize>,
}

/// `k` cell midpoints evenly covering `(lo, hi)`.
pub fn cell_centers(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let step = (hi - lo) / k as f64;
    (0..k).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

impl GridSpec {
    pub fn new(
        sigma_points: usize,
        xi_points: usize,
        replications: usize,
        sizes: Vec<usize>,
    ) -> Result<Self> {
        let r = ParameterRanges::default();
        let spec = Self {
            sigma_axis: cell_centers(r.sigma.0, r.sigma.1, sigma_points),
            xi_axis: cell_centers(r.xi.0, r.xi.1, xi_points),
            mu: 0.0,
            replications,
            sizes,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 20 × 20 grid, 100 replications, sizes 72, 416 and 1000.
    pub fn full() -> Self {
        Self::new(20, 20, 100, vec![72, 416, 1000]).expect("valid default grid")
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = |a: &[f64]| !a.is_empty() && a.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.sigma_axis) || !increasing(&self.xi_axis) {
            return Err(Error::InvalidParameter(
                "grid axes must be nonempty and strictly increasing".into(),
            ));
        }
        if self.replications == 0 || self.sizes.is_empty() {
            return Err(Error::InvalidParameter(
                "grid needs at least one replication and one size".into(),
            ));
        }
        Ok(())
    }
}

/// One replicate's estimate in one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub size: usize,
    pub sigma: f64,
    pub xi: f64,
    pub replicate: usize,
    pub estimator: Estimator,
    pub sigma_hat: f64,
    pub xi_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCell {
    pub size: usize,
    pub sigma: f64,
    pub xi: f64,
    pub estimator: Estimator,
    pub count: usize,
    pub mse_sigma: f64,
    pub mse_xi: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MseReport {
    pub records: Vec<GridRecord>,
    pub cells: Vec<MseCell>,
    pub mle_exclusions: usize,
}

impl MseReport {
    /// Mean over cells of the per-cell MSEs `(σ, ξ)`.
    pub fn aggregate(&self, size: usize, estimator: Estimator) -> Option<(f64, f64)> {
        let cells: Vec<&MseCell> = self
            .cells
            .iter()
            .filter(|c| c.size == size && c.estimator == estimator && c.count > 0)
            .collect();
        if cells.is_empty() {
            return None;
        }
        let k = cells.len() as f64;
        Some((
            cells.iter().map(|c| c.mse_sigma).sum::<f64>() / k,
            cells.iter().map(|c| c.mse_xi).sum::<f64>() / k,
        ))
    }
}

fn cells_from_records(records: &[GridRecord]) -> Vec<MseCell> {
    let mut acc: BTreeMap<(usize, u64, u64, Estimator), (f64, f64, f64, f64, usize)> =
        BTreeMap::new();
    for r in records {
        let e = acc
            .entry((r.size, r.sigma.to_bits(), r.xi.to_bits(), r.estimator))
            .or_insert((r.sigma, r.xi, 0.0, 0.0, 0));
        e.2 += (r.sigma_hat - r.sigma).powi(2);
        e.3 += (r.xi_hat - r.xi).powi(2);
        e.4 += 1;
    }
    acc.into_iter()
        .map(
            |((size, _, _, estimator), (sigma, xi, ss, sx, count))| MseCell {
                size,
                sigma,
                xi,
                estimator,
                count,
                mse_sigma: ss / count as f64,
                mse_xi: sx / count as f64,
            },
        )
        .collect()
}

/// Replicated estimation at every `(σ, ξ)` cell and sample size.
pub fn mse_grid(model: &NetworkModel, grid: &GridSpec, seed: u64) -> Result<MseReport> {
    grid.validate()?;
    let sample_seed = derive_seed(seed, DOMAIN_SAMPLES);
    let mut report = MseReport::default();
    let mut stream = 0u64;
    for &size in &grid.sizes {
        for &sigma in &grid.sigma_axis {
            for &xi in &grid.xi_axis {
                let theta = GevParams::new(grid.mu, sigma, xi)?;
                let samples = (0..grid.replications)
                    .map(|_| {
                        stream += 1;
                        theta.sample_with(size, &mut stream_rng(sample_seed, stream))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let nn = estimate_batch(model, &samples)?;
                for (rep, (sample, est)) in samples.iter().zip(&nn).enumerate() {
                    let rec = |estimator, p: &GevParams| GridRecord {
                        size,
                        sigma,
                        xi,
                        replicate: rep,
                        estimator,
                        sigma_hat: p.sigma(),
                        xi_hat: p.xi(),
                    };
                    report.records.push(rec(Estimator::Nn, est));
                    let fit = fit_mle(sample)?;
                    if fit.converged {
                        report.records.push(rec(Estimator::Mle, &fit.params));
                    } else {
                        report.mle_exclusions += 1;
                    }
                }
            }
        }
    }
    report.cells = cells_from_records(&report.records);
    Ok(report)
}

/// Bootstrap and likelihood intervals for one test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub case: usize,
    pub parameter: Parameter,
    pub truth: f64,
    pub estimate: f64,
    pub nn_lower: f64,
    pub nn_upper: f64,
    pub nn_covers: bool,
    pub mle_lower: Option<f64>,
    pub mle_upper: Option<f64>,
    /// Bootstrap width over likelihood width, when the likelihood interval exists.
    pub width_ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalReport {
    pub rows: Vec<IntervalRow>,
    /// Cases without a likelihood interval (unconverged fit or non-positive-definite Hessian).
    pub mle_exclusions: usize,
    pub redraws: usize,
}

impl IntervalReport {
    fn of(&self, parameter: Parameter) -> impl Iterator<Item = &IntervalRow> {
        self.rows.iter().filter(move |r| r.parameter == parameter)
    }

    /// Fraction of cases whose bootstrap interval contains the truth.
    pub fn coverage(&self, parameter: Parameter) -> f64 {
        let (hit, total) = self
            .of(parameter)
            .fold((0, 0), |(h, t), r| (h + r.nn_covers as usize, t + 1));
        hit as f64 / total as f64
    }

    pub fn median_width_ratio(&self, parameter: Parameter) -> f64 {
        let ratios: Vec<f64> = self.of(parameter).filter_map(|r| r.width_ratio).collect();
        median_iqr(&ratios).0
    }
}

/// For `n_cases` random truths: simulate a sample of size 1000, estimate with
/// the network, bootstrap `b` replicates around that estimate, and compare with
/// the likelihood interval of the same sample.
pub fn interval_study(
    model: &NetworkModel,
    n_cases: usize,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<IntervalReport> {
    let (truths, samples) = simulate_cases(n_cases, TEST_SAMPLE_SIZE, seed)?;
    let nn = estimate_batch(model, &samples)?;
    let boot_seed = derive_seed(seed, DOMAIN_BOOTSTRAP);
    let mut report = IntervalReport::default();
    for (i, ((truth, sample), est)) in truths.iter().zip(&samples).zip(&nn).enumerate() {
        let boot = parametric_bootstrap(
            model,
            est,
            sample.len(),
            b,
            level,
            derive_seed(boot_seed, i as u64),
        )?;
        report.redraws += boot.redraws;
        let fit = fit_mle(sample)?;
        let mle = match mle_confidence_intervals(&fit, sample, level) {
            Ok(ci) => Some(ci),
            Err(e) if e.is_numerical() => {
                report.mle_exclusions += 1;
                None
            }
            Err(e) => return Err(e),
        };
        let (t, e) = (truth.to_array(), est.to_array());
        for (k, parameter) in [Parameter::Mu, Parameter::Sigma, Parameter::Xi]
            .into_iter()
            .enumerate()
        {
            let ci = &boot.intervals[k];
            let like = mle.as_ref().map(|m| m[k]);
            report.rows.push(IntervalRow {
                case: i,
                parameter,
                truth: t[k],
                estimate: e[k],
                nn_lower: ci.lower,
                nn_upper: ci.upper,
                nn_covers: ci.contains(t[k]),
                mle_lower: like.map(|c| c.lower),
                mle_upper: like.map(|c| c.upper),
                width_ratio: like.and_then(|c| ci_width_ratio(ci, &c).ok()),
            });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n_test: usize,
    pub sample_size: usize,
    pub nn_seconds: f64,
    pub mle_seconds: f64,
    pub nn_per_sample: f64,
    pub mle_per_sample: f64,
    pub speedup: f64,
    /// Network training time, from the model metadata, if recorded.
    pub training_seconds: Option<f64>,
    pub mle_unconverged: usize,
}

/// Wall-clock time of batch network estimation against per-sample likelihood
/// fits on the same `n_test` samples, both on the calling thread.
pub fn timing_benchmark(model: &NetworkModel, n_test: usize, seed: u64) -> Result<TimingReport> {
    if n_test == 0 {
        return Err(Error::InvalidParameter(
            "timing needs at least one test sample".into(),
        ));
    }
    let (_, samples) = simulate_cases(n_test, TEST_SAMPLE_SIZE, seed)?;
    let t = Instant::now();
    let nn = estimate_batch(model, &samples)?;
    let nn_seconds = t.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    std::hint::black_box(&nn);
    let t = Instant::now();
    let mut unconverged = 0;
    for s in &samples {
        let fit = fit_mle(s)?;
        unconverged += !fit.converged as usize;
        std::hint::black_box(&fit);
    }
    let mle_seconds = t.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    Ok(TimingReport {
        n_test,
        sample_size: TEST_SAMPLE_SIZE,
        nn_seconds,
        mle_seconds,
        nn_per_sample: nn_seconds / n_test as f64,
        mle_per_sample: mle_seconds / n_test as f64,
        speedup: mle_seconds / nn_seconds,
        training_seconds: model.metadata.training_seconds,
        mle_unconverged: unconverged,
    })
}
