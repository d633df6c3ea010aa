//! Simulated training data, the training loop, and the end-to-end estimator.

use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gev::{GevParams, GevSample, XI_LIMIT};
use crate::nn::{
    self, NetworkModel, OptimizerState, OutputScales, PenaltyMode, TrainingRecord, INPUT_DIM,
};
use crate::rng::{derive_seed, stream_rng};
use crate::summaries::{summarize, PercentileSet, QuantileSummary};

/// Smallest sample the estimator accepts.
pub const MIN_ESTIMATION_SIZE: usize = 30;
/// Below this size estimates are produced with a warning.
pub const WARN_ESTIMATION_SIZE: usize = 72;

/// Sample sizes used by the varying-size scenario.
pub const DEFAULT_VARYING_SIZES: [usize; 5] = [30, 72, 182, 416, 1000];

const DOMAIN_CONFIGS: u64 = 1;
const DOMAIN_SIZES: u64 = 2;
const DOMAIN_SAMPLES: u64 = 3;
const DOMAIN_SHUFFLE: u64 = 4;

/// Open intervals from which training configurations are drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterRanges {
    pub mu: (f64, f64),
    pub sigma: (f64, f64),
    pub xi: (f64, f64),
}

impl Default for ParameterRanges {
    fn default() -> Self {
        Self {
            mu: (1.0, 50.0),
            sigma: (0.1, 40.0),
            xi: (-0.4, 0.4),
        }
    }
}

impl ParameterRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("mu", self.mu), ("sigma", self.sigma), ("xi", self.xi)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "{name} range ({lo}, {hi}) is empty"
                )));
            }
        }
        if self.sigma.0 < 0.0 {
            return Err(Error::InvalidParameter(
                "sigma range must be positive".into(),
            ));
        }
        if self.xi.0 <= -XI_LIMIT || self.xi.1 >= XI_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "xi range must lie within (-{XI_LIMIT}, {XI_LIMIT})"
            )));
        }
        Ok(())
    }
}

fn open_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    loop {
        let u: f64 = rng.sample(rand::distr::Open01);
        let v = lo + (hi - lo) * u;
        // rounding can land on an endpoint for narrow intervals
        if v > lo && v < hi {
            return v;
        }
    }
}

/// `count` independent uniform draws from `ranges`.
pub fn sample_parameter_configs(
    count: usize,
    ranges: &ParameterRanges,
    seed: u64,
) -> Result<Vec<GevParams>> {
    ranges.validate()?;
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let mu = open_uniform(&mut rng, ranges.mu);
            let sigma = open_uniform(&mut rng, ranges.sigma);
            let xi = open_uniform(&mut rng, ranges.xi);
            GevParams::new(mu, sigma, xi)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// Every configuration simulates a sample of size `n`.
    FixedSize { n: usize },
    /// Configurations are split evenly across `sizes`, assigned at random.
    VaryingSize { sizes: Vec<usize> },
}

impl Scenario {
    pub fn fixed() -> Self {
        Scenario::FixedSize { n: 1000 }
    }

    pub fn varying() -> Self {
        Scenario::VaryingSize {
            sizes: DEFAULT_VARYING_SIZES.to_vec(),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Scenario::FixedSize { n } => format!("fixed:{n}"),
            Scenario::VaryingSize { sizes } => {
                let s: Vec<String> = sizes.iter().map(usize::to_string).collect();
                format!("varying:{}", s.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub n_train: usize,
    pub n_valid: usize,
    pub scenario: Scenario,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_valid == 0 {
            return Err(Error::InvalidParameter(
                "training and validation counts must be at least 1".into(),
            ));
        }
        let sizes: &[usize] = match &self.scenario {
            Scenario::FixedSize { n } => std::slice::from_ref(n),
            Scenario::VaryingSize { sizes } => sizes,
        };
        if sizes.is_empty() {
            return Err(Error::InvalidParameter(
                "varying-size scenario needs at least one size".into(),
            ));
        }
        if let Some(bad) = sizes
            .iter()
            .find(|&&n| !(MIN_ESTIMATION_SIZE..=1000).contains(&n))
        {
            return Err(Error::InvalidParameter(format!(
                "sample size {bad} outside [30, 1000]"
            )));
        }
        Ok(())
    }
}

/// Simulated records together with the raw-scale parameters behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<TrainingRecord>,
    pub valid: Vec<TrainingRecord>,
    pub train_params: Vec<GevParams>,
    pub valid_params: Vec<GevParams>,
    /// Samples discarded for a degenerate IQR and simulated again.
    pub redraws: usize,
}

/// Equal numbers of each size (the first `count % k` sizes get one extra),
/// in random order.
pub fn assign_sample_sizes<R: Rng>(count: usize, sizes: &[usize], rng: &mut R) -> Vec<usize> {
    if sizes.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<usize> = (0..count).map(|i| sizes[i % sizes.len()]).collect();
    out.shuffle(rng);
    out
}

/// Summarize a fresh sample from `theta`, redrawing (same stream, fresh
/// values) while the sample is degenerate. Returns the record and the number
/// of redraws.
pub(crate) fn simulate_record<R: Rng>(
    theta: &GevParams,
    n: usize,
    pset: &PercentileSet,
    rng: &mut R,
) -> Result<(TrainingRecord, usize)> {
    let mut redraws = 0;
    loop {
        let sample = theta.sample_with(n, rng)?;
        match summarize(&sample, pset) {
            Ok(summary) => {
                let target_std = summary.info.standardize_params(theta);
                return Ok((
                    TrainingRecord {
                        summary,
                        target_std,
                    },
                    redraws,
                ));
            }
            Err(Error::DegenerateSample(_)) if redraws < 1000 => redraws += 1,
            Err(e) => return Err(e),
        }
    }
}

pub fn build_dataset(spec: &DatasetSpec, ranges: &ParameterRanges) -> Result<Dataset> {
    spec.validate()?;
    let total = spec.n_train + spec.n_valid;
    let params = sample_parameter_configs(total, ranges, derive_seed(spec.seed, DOMAIN_CONFIGS))?;
    let sizes = match &spec.scenario {
        Scenario::FixedSize { n } => vec![*n; total],
        Scenario::VaryingSize { sizes } => {
            let mut rng = stream_rng(derive_seed(spec.seed, DOMAIN_SIZES), 0);
            assign_sample_sizes(total, sizes, &mut rng)
        }
    };
    let pset = PercentileSet::standard();
    let sample_seed = derive_seed(spec.seed, DOMAIN_SAMPLES);
    let mut records = Vec::with_capacity(total);
    let mut redraws = 0;
    for (i, (theta, &n)) in params.iter().zip(&sizes).enumerate() {
        let mut rng = stream_rng(sample_seed, i as u64);
        let (rec, r) = simulate_record(theta, n, &pset, &mut rng)?;
        redraws += r;
        records.push(rec);
    }
    if redraws > 0 {
        log::info!("redrew {redraws} degenerate samples while building the dataset");
    }
    let valid = records.split_off(spec.n_train);
    let mut train_params = params;
    let valid_params = train_params.split_off(spec.n_train);
    Ok(Dataset {
        train: records,
        valid,
        train_params,
        valid_params,
        redraws,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without validation improvement.
    pub patience: usize,
    /// Multiply the learning rate by `plateau_factor` after this many stale epochs.
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub min_lr: f64,
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub lambda: f64,
    /// Penalty used for the gradient steps; validation always uses the indicator.
    pub penalty_mode: PenaltyMode,
    pub output_scales: OutputScales,
    pub sigma_floor: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: nn::DEFAULT_HIDDEN.to_vec(),
            batch_size: 64,
            max_epochs: 150,
            patience: 10,
            plateau_patience: 5,
            plateau_factor: 0.5,
            min_lr: 1e-5,
            lr: OptimizerState::DEFAULT_LR,
            rho: OptimizerState::DEFAULT_RHO,
            eps: OptimizerState::DEFAULT_EPS,
            lambda: 1.0,
            penalty_mode: PenaltyMode::Hinge,
            output_scales: OutputScales::default(),
            sigma_floor: nn::DEFAULT_SIGMA_FLOOR,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0
            || self.patience == 0
            || self.plateau_patience == 0
            || self.max_epochs == 0
        {
            return Err(Error::InvalidParameter(
                "batch size, epoch count and patience values must be at least 1".into(),
            ));
        }
        if !(self.lr > 0.0
            && self.min_lr > 0.0
            && self.plateau_factor > 0.0
            && self.plateau_factor <= 1.0)
        {
            return Err(Error::InvalidParameter(
                "learning-rate settings must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter("lambda must be nonnegative".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidParameter(
                "hidden layers need at least one unit".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean training batch loss (with the training penalty mode).
    pub train_loss: f64,
    /// Validation loss with the indicator penalty.
    pub valid_loss: f64,
    /// Validation MSE alone.
    pub valid_mse: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingHistory {
    pub fn best_valid_loss(&self) -> f64 {
        self.epochs[self.best_epoch - 1].valid_loss
    }
}

fn parameters_finite(model: &NetworkModel) -> bool {
    model
        .layers()
        .iter()
        .all(|l| l.weights.iter().all(|w| w.is_finite()) && l.biases.iter().all(|b| b.is_finite()))
}

/// Mean over `batch_size` chunks of the indicator-penalized batch loss, and
/// the record-weighted MSE.
pub fn validation_loss(
    model: &NetworkModel,
    records: &[TrainingRecord],
    batch_size: usize,
    lambda: f64,
) -> (f64, f64) {
    let mut loss_sum = 0.0;
    let mut batches = 0;
    let mut sq_sum = 0.0;
    for chunk in records.chunks(batch_size.max(1)) {
        let preds = model.predict_batch(nn::input_matrix(chunk).view());
        loss_sum += nn::batch_loss(&preds, chunk, lambda, PenaltyMode::Indicator);
        sq_sum += nn::batch_loss(&preds, chunk, 0.0, PenaltyMode::Indicator) * chunk.len() as f64;
        batches += 1;
    }
    (loss_sum / batches as f64, sq_sum / records.len() as f64)
}

/// Mini-batch RMSprop with plateau learning-rate reduction, early stopping and
/// best-weight restoration.
pub fn train(
    train_set: &[TrainingRecord],
    valid_set: &[TrainingRecord],
    config: &TrainConfig,
) -> Result<(NetworkModel, TrainingHistory)> {
    config.validate()?;
    if train_set.is_empty() || valid_set.is_empty() {
        return Err(Error::InvalidParameter(
            "training and validation sets must be nonempty".into(),
        ));
    }
    let started = Instant::now();
    let mut model = NetworkModel::initialize(
        &config.hidden,
        config.output_scales,
        config.sigma_floor,
        config.seed,
    );
    let mut opt = OptimizerState::new(&model, config.lr, config.rho, config.eps);
    let mut rng = stream_rng(derive_seed(config.seed, DOMAIN_SHUFFLE), 0);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, NetworkModel)> = None;
    let mut since_best = 0;
    let mut since_lr_change = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            batch.clear();
            batch.extend(idx.iter().map(|&i| train_set[i].clone()));
            let (loss, grads) = nn::backward(&model, &batch, config.lambda, config.penalty_mode);
            if !loss.is_finite() || grads.iter_values().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss,
                });
            }
            opt.step(&mut model, &grads);
            if !parameters_finite(&model) {
                return Err(Error::Diverged {
                    epoch,
                    batch: b,
                    loss,
                });
            }
            loss_sum += loss;
            n_batches += 1;
        }
        let (valid_loss, valid_mse) =
            validation_loss(&model, valid_set, config.batch_size, config.lambda);
        if !valid_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                batch: n_batches,
                loss: valid_loss,
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            valid_loss,
            valid_mse,
            lr: opt.lr,
        };
        log::debug!(
            "epoch {epoch}: train {:.6} valid {:.6} (mse {:.6}) lr {:.2e}",
            record.train_loss,
            valid_loss,
            valid_mse,
            opt.lr
        );
        history.push(record);

        if best.as_ref().is_none_or(|(b, _, _)| valid_loss < *b) {
            best = Some((valid_loss, epoch, model.clone()));
            since_best = 0;
            since_lr_change = 0;
        } else {
            since_best += 1;
            since_lr_change += 1;
            if since_best >= config.patience {
                stopped_early = epoch < config.max_epochs;
                break;
            }
            if since_lr_change >= config.plateau_patience {
                opt.lr = (opt.lr * config.plateau_factor).max(config.min_lr);
                since_lr_change = 0;
            }
        }
    }

    let (best_loss, best_epoch, mut best_model) = best.expect("at least one epoch ran");
    best_model.metadata = nn::TrainingMetadata {
        epochs: history.len(),
        best_epoch: Some(best_epoch),
        final_validation_loss: Some(best_loss),
        training_seconds: Some(started.elapsed().as_secs_f64()),
        scenario: None,
    };
    Ok((
        best_model,
        TrainingHistory {
            epochs: history,
            best_epoch,
            stopped_early,
        },
    ))
}

/// Raw-scale estimates for already computed summaries, one batched forward
/// pass.
pub fn predict_summaries(model: &NetworkModel, summaries: &[QuantileSummary]) -> Vec<GevParams> {
    let mut x = Array2::zeros((summaries.len(), INPUT_DIM));
    for (mut row, s) in x.axis_iter_mut(Axis(0)).zip(summaries) {
        for (dst, src) in row.iter_mut().zip(&s.percentiles) {
            *dst = *src;
        }
    }
    model
        .predict_batch(x.view())
        .iter()
        .zip(summaries)
        .map(|(p, s)| s.info.destandardize_params(p))
        .collect()
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_ESTIMATION_SIZE {
        return Err(Error::SampleTooSmall {
            n,
            min: MIN_ESTIMATION_SIZE,
        });
    }
    Ok(())
}

/// Estimate raw-scale GEV parameters of `sample` with `model`.
pub fn estimate(model: &NetworkModel, sample: &GevSample) -> Result<GevParams> {
    check_size(sample.len())?;
    if sample.len() < WARN_ESTIMATION_SIZE {
        log::warn!(
            "estimating from only {} values; accuracy is reduced below {WARN_ESTIMATION_SIZE}",
            sample.len()
        );
    }
    let summary = summarize(sample, model.percentile_set())?;
    let p = predict_summaries(model, std::slice::from_ref(&summary))[0];
    GevParams::new(p.mu(), p.sigma(), p.xi())
}

/// [`estimate`] for many samples with a single batched forward pass.
pub fn estimate_batch(model: &NetworkModel, samples: &[GevSample]) -> Result<Vec<GevParams>> {
    let summaries = samples
        .iter()
        .map(|s| {
            check_size(s.len())?;
            summarize(s, model.percentile_set())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(predict_summaries(model, &summaries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_draws() {
        let r = ParameterRanges::default();
        assert!(sample_parameter_configs(0, &r, 1).unwrap().is_empty());
        let draws = sample_parameter_configs(10_000, &r, 2).unwrap();
        assert_eq!(draws, sample_parameter_configs(10_000, &r, 2).unwrap());
        let n = draws.len() as f64;
        for (k, (lo, hi)) in [r.mu, r.sigma, r.xi].into_iter().enumerate() {
            let vals: Vec<f64> = draws.iter().map(|p| p.to_array()[k]).collect();
            assert!(vals.iter().all(|&v| v > lo && v < hi));
            let mean = vals.iter().sum::<f64>() / n;
            let se = (hi - lo) / 12f64.sqrt() / n.sqrt();
            assert!(
                (mean - 0.5 * (lo + hi)).abs() < 3.0 * se,
                "component {k}: {mean}"
            );
        }
        let bad = ParameterRanges {
            xi: (-0.6, 0.2),
            ..r
        };
        assert!(sample_parameter_configs(1, &bad, 0).is_err());
    }

    #[test]
    fn size_assignment_is_balanced() {
        let mut rng = stream_rng(1, 0);
        let sizes = assign_sample_sizes(340_000, &DEFAULT_VARYING_SIZES, &mut rng);
        for s in DEFAULT_VARYING_SIZES {
            assert_eq!(sizes.iter().filter(|&&v| v == s).count(), 68_000);
        }
        // shuffled, not in round-robin order
        assert_ne!(&sizes[..5], &DEFAULT_VARYING_SIZES[..]);
    }

    #[test]
    fn dataset_records_match_their_parameters() {
        let spec = DatasetSpec {
            n_train: 40,
            n_valid: 10,
            scenario: Scenario::fixed(),
            seed: 3,
        };
        let ds = build_dataset(&spec, &ParameterRanges::default()).unwrap();
        assert_eq!(ds.train.len(), 40);
        assert_eq!(ds.valid.len(), 10);
        for (rec, theta) in ds
            .train
            .iter()
            .zip(&ds.train_params)
            .chain(ds.valid.iter().zip(&ds.valid_params))
        {
            assert_eq!(rec.summary.n, 1000);
            assert_eq!(rec.target_std, rec.summary.info.standardize_params(theta));
            assert!(rec.target_std.sigma() > 0.0);
        }
        assert_eq!(
            ds,
            build_dataset(&spec, &ParameterRanges::default()).unwrap()
        );
    }

    #[test]
    fn varying_dataset_uses_all_sizes() {
        let spec = DatasetSpec {
            n_train: 80,
            n_valid: 20,
            scenario: Scenario::varying(),
            seed: 5,
        };
        let ds = build_dataset(&spec, &ParameterRanges::default()).unwrap();
        for s in DEFAULT_VARYING_SIZES {
            let count = ds
                .train
                .iter()
                .chain(&ds.valid)
                .filter(|r| r.summary.n == s)
                .count();
            assert_eq!(count, 20);
        }
        let bad = DatasetSpec {
            scenario: Scenario::VaryingSize { sizes: vec![10] },
            ..spec
        };
        assert!(build_dataset(&bad, &ParameterRanges::default()).is_err());
    }

    fn toy_config() -> TrainConfig {
        TrainConfig {
            hidden: vec![16],
            max_epochs: 6,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    fn toy_data() -> Dataset {
        let spec = DatasetSpec {
            n_train: 500,
            n_valid: 100,
            scenario: Scenario::FixedSize { n: 200 },
            seed: 8,
        };
        build_dataset(&spec, &ParameterRanges::default()).unwrap()
    }

    #[test]
    fn toy_training_reduces_loss_and_is_deterministic() {
        let ds = toy_data();
        let cfg = toy_config();
        let (model, hist) = train(&ds.train, &ds.valid, &cfg).unwrap();
        let losses: Vec<f64> = hist.epochs.iter().map(|e| e.train_loss).collect();
        assert!(losses[1] < losses[0] && losses[2] < losses[1], "{losses:?}");
        let min = hist
            .epochs
            .iter()
            .map(|e| e.valid_loss)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(hist.best_valid_loss(), min);
        assert_eq!(model.metadata.final_validation_loss, Some(min));
        assert_eq!(
            validation_loss(&model, &ds.valid, cfg.batch_size, cfg.lambda).0,
            min
        );

        let (model2, hist2) = train(&ds.train, &ds.valid, &cfg).unwrap();
        assert_eq!(hist, hist2);
        assert_eq!(model.layers(), model2.layers());
    }

    #[test]
    fn early_stopping_respects_patience() {
        let ds = toy_data();
        // a vanishing learning rate makes improvement stall quickly
        let cfg = TrainConfig {
            lr: 1e-12,
            min_lr: 1e-12,
            patience: 2,
            plateau_patience: 1,
            max_epochs: 40,
            ..toy_config()
        };
        let (_, hist) = train(&ds.train, &ds.valid, &cfg).unwrap();
        assert!(hist.epochs.len() <= 40);
        if hist.stopped_early {
            assert_eq!(hist.epochs.len(), hist.best_epoch + cfg.patience);
        }
    }

    #[test]
    fn diverging_training_is_reported() {
        let ds = toy_data();
        let cfg = TrainConfig {
            lr: f64::MAX,
            ..toy_config()
        };
        assert!(matches!(
            train(&ds.train, &ds.valid, &cfg),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn estimate_size_checks_and_equivariance() {
        let model = NetworkModel::initialize(&[8], OutputScales::default(), 1e-6, 3);
        let theta = GevParams::new(5.0, 2.0, 0.1).unwrap();
        assert!(matches!(
            estimate(&model, &theta.sample(29, 1).unwrap()),
            Err(Error::SampleTooSmall { .. })
        ));
        assert!(matches!(
            estimate(&model, &GevSample::new(vec![4.0; 100]).unwrap()),
            Err(Error::DegenerateSample(_))
        ));
        let y = theta.sample(300, 2).unwrap();
        let base = estimate(&model, &y).unwrap();
        let scaled = estimate(&model, &y.affine(8.0, 0.0).unwrap()).unwrap();
        assert_eq!(
            scaled.to_array(),
            [8.0 * base.mu(), 8.0 * base.sigma(), base.xi()]
        );
        let (a, b) = (3.7, -12.25);
        let moved = estimate(&model, &y.affine(a, b).unwrap()).unwrap();
        assert!((moved.mu() - (a * base.mu() + b)).abs() < 1e-9 * (1.0 + moved.mu().abs()));
        assert!((moved.sigma() - a * base.sigma()).abs() < 1e-9 * moved.sigma());
        assert!((moved.xi() - base.xi()).abs() < 1e-9);
        let batch = estimate_batch(&model, &[y.clone(), y]).unwrap();
        assert_eq!(batch[0], base);
    }
}
