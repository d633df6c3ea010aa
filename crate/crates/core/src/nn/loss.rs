use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{NetworkModel, INPUT_DIM, OUTPUT_DIM};
use crate::gev::{GevParams, XI_LIMIT};
use crate::summaries::QuantileSummary;

/// How the support-constraint penalty enters the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    /// 1 if any record in the batch violates the support, else 0. Carries no
    /// gradient.
    Indicator,
    /// Mean over records of `relu(−(σ̂ + ξ̂(y − μ̂)))` at the sample min and max.
    Hinge,
}

/// One simulated training example on the standardized scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub summary: QuantileSummary,
    pub target_std: GevParams,
}

/// Map a raw 3-vector to `(s_μ·tanh r₁, max(relu r₂, floor), s_ξ·tanh r₃)`.
///
/// The shape is clamped just inside the open band so that a saturated `tanh`
/// still yields a valid estimate.
pub fn output_activation(
    raw: [f64; OUTPUT_DIM],
    scales: super::OutputScales,
    sigma_floor: f64,
) -> GevParams {
    let mu = scales.mu * raw[0].tanh();
    let sigma = if raw[1].is_nan() {
        raw[1]
    } else {
        raw[1].max(sigma_floor)
    };
    let xi_max = scales.xi.min(XI_LIMIT.next_down());
    let xi = (scales.xi * raw[2].tanh()).clamp(-xi_max, xi_max);
    GevParams::new_unchecked(mu, sigma, xi)
}

/// `σ + ξ(y − μ)`; positive inside the support.
fn support_margin(p: &GevParams, y: f64) -> f64 {
    p.sigma() + p.xi() * (y - p.mu())
}

fn violates(p: &GevParams, s: &QuantileSummary) -> bool {
    support_margin(p, s.sample_min) <= 0.0 || support_margin(p, s.sample_max) <= 0.0
}

/// Batch MSE (sum of the three squared component errors, averaged over the
/// batch) plus `lambda` times the support penalty.
pub fn batch_loss(
    preds: &[GevParams],
    records: &[TrainingRecord],
    lambda: f64,
    mode: PenaltyMode,
) -> f64 {
    assert_eq!(preds.len(), records.len(), "one prediction per record");
    if preds.is_empty() {
        return 0.0;
    }
    let nb = preds.len() as f64;
    let mse = preds
        .iter()
        .zip(records)
        .map(|(p, r)| {
            let t = &r.target_std;
            (p.mu() - t.mu()).powi(2) + (p.sigma() - t.sigma()).powi(2) + (p.xi() - t.xi()).powi(2)
        })
        .sum::<f64>()
        / nb;
    let penalty = match mode {
        PenaltyMode::Indicator => {
            if preds
                .iter()
                .zip(records)
                .any(|(p, r)| violates(p, &r.summary))
            {
                1.0
            } else {
                0.0
            }
        }
        PenaltyMode::Hinge => {
            preds
                .iter()
                .zip(records)
                .map(|(p, r)| {
                    (-support_margin(p, r.summary.sample_min)).max(0.0)
                        + (-support_margin(p, r.summary.sample_max)).max(0.0)
                })
                .sum::<f64>()
                / nb
        }
    };
    mse + lambda * penalty
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

/// Loss gradients, one entry per layer, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
}

impl Gradients {
    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.biases.iter()).copied())
    }
}

pub(crate) fn input_matrix(records: &[TrainingRecord]) -> Array2<f64> {
    let mut x = Array2::zeros((records.len(), INPUT_DIM));
    for (mut row, r) in x.axis_iter_mut(Axis(0)).zip(records) {
        for (dst, src) in row.iter_mut().zip(&r.summary.percentiles) {
            *dst = *src;
        }
    }
    x
}

/// Loss value and exact reverse-mode gradients of [`batch_loss`] over
/// `records`. In indicator mode the penalty is piecewise constant and
/// contributes no gradient; in hinge mode its subgradient (0 at the kink) is
/// included.
pub fn backward(
    model: &NetworkModel,
    records: &[TrainingRecord],
    lambda: f64,
    mode: PenaltyMode,
) -> (f64, Gradients) {
    assert!(!records.is_empty(), "backward needs a nonempty batch");
    let scales = model.output_scales();
    let floor = model.sigma_floor();
    let trace = model.trace(input_matrix(records).view());
    let raw = trace.inputs.last().expect("output");
    let nb = records.len() as f64;

    let preds: Vec<GevParams> = raw
        .axis_iter(Axis(0))
        .map(|r| output_activation([r[0], r[1], r[2]], scales, floor))
        .collect();
    let loss = batch_loss(&preds, records, lambda, mode);

    // dL/d(raw output)
    let mut delta = Array2::<f64>::zeros((records.len(), OUTPUT_DIM));
    for (i, (p, rec)) in preds.iter().zip(records).enumerate() {
        let t = &rec.target_std;
        let mut d_mu = 2.0 * (p.mu() - t.mu()) / nb;
        let mut d_sigma = 2.0 * (p.sigma() - t.sigma()) / nb;
        let mut d_xi = 2.0 * (p.xi() - t.xi()) / nb;
        if mode == PenaltyMode::Hinge && lambda != 0.0 {
            for y in [rec.summary.sample_min, rec.summary.sample_max] {
                if support_margin(p, y) < 0.0 {
                    // d/dθ of −(σ + ξ(y − μ))
                    d_mu += lambda * p.xi() / nb;
                    d_sigma -= lambda / nb;
                    d_xi -= lambda * (y - p.mu()) / nb;
                }
            }
        }
        let r = raw.row(i);
        let th_mu = r[0].tanh();
        let th_xi = r[2].tanh();
        delta[[i, 0]] = d_mu * scales.mu * (1.0 - th_mu * th_mu);
        delta[[i, 1]] = if r[1] > floor { d_sigma } else { 0.0 };
        delta[[i, 2]] = d_xi * scales.xi * (1.0 - th_xi * th_xi);
    }

    let layers = model.layers();
    let mut grads = Vec::with_capacity(layers.len());
    for l in (0..layers.len()).rev() {
        let a_prev = &trace.inputs[l];
        let gw = delta.t().dot(a_prev);
        let gb = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut next = delta.dot(&layers[l].weights);
            let act = layers[l - 1].activation;
            ndarray::Zip::from(&mut next)
                .and(&trace.pre[l - 1])
                .and(&trace.inputs[l])
                .for_each(|d, &z, &a| *d *= act.derivative(z, a));
            delta = next;
        }
        grads.push(LayerGradient {
            weights: gw,
            biases: gb,
        });
    }
    grads.reverse();
    (loss, Gradients { layers: grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::OutputScales;
    use crate::rng::stream_rng;
    use crate::summaries::{StandardizationInfo, PERCENTILE_COUNT};
    use rand::Rng;

    fn record(target: [f64; 3], min: f64, max: f64) -> TrainingRecord {
        TrainingRecord {
            summary: QuantileSummary {
                percentiles: [0.0; PERCENTILE_COUNT],
                sample_min: min,
                sample_max: max,
                info: StandardizationInfo::identity(),
                n: 100,
            },
            target_std: GevParams::new_unchecked(target[0], target[1], target[2]),
        }
    }

    #[test]
    fn output_activation_examples() {
        let s = OutputScales::default();
        assert_eq!(
            output_activation([0.0; 3], s, 1e-6).to_array(),
            [0.0, 1e-6, 0.0]
        );
        assert_eq!(output_activation([0.0, 2.0, 0.0], s, 1e-6).sigma(), 2.0);
        let hi = output_activation([0.0, 1.0, f64::INFINITY], s, 1e-6);
        let lo = output_activation([0.0, 1.0, f64::NEG_INFINITY], s, 1e-6);
        assert!(hi.xi() < 0.5 && hi.xi() > 0.4999999);
        assert!(lo.xi() > -0.5 && lo.xi() < -0.4999999);
        assert!(GevParams::new(hi.mu(), hi.sigma(), hi.xi()).is_ok());
    }

    #[test]
    fn loss_examples() {
        let recs = vec![record([1.0, 2.0, 0.1], -1.0, 1.0)];
        let exact = vec![GevParams::new_unchecked(1.0, 2.0, 0.1)];
        assert_eq!(batch_loss(&exact, &recs, 1.0, PenaltyMode::Indicator), 0.0);
        assert_eq!(batch_loss(&exact, &recs, 1.0, PenaltyMode::Hinge), 0.0);

        let recs = vec![record([0.0, 1.0, 0.0], -1.0, 1.0)];
        // component errors (1, 2, −3); margins 3 − 3(y − 1) are 9 and 3
        let off = vec![GevParams::new_unchecked(1.0, 3.0, -3.0)];
        assert_eq!(batch_loss(&off, &recs, 1.0, PenaltyMode::Indicator), 14.0);
        assert_eq!(batch_loss(&off, &recs, 1.0, PenaltyMode::Hinge), 14.0);

        let recs = vec![record([0.0, 1.0, -0.2], -1.0, 5.0)];
        let pred = vec![GevParams::new_unchecked(0.0, 1.0, -0.5)];
        let mse = 0.3f64 * 0.3;
        assert!(
            (batch_loss(&pred, &recs, 1.0, PenaltyMode::Indicator) - (mse + 1.0)).abs() < 1e-15
        );
        // hinge: margin at 5 is 1 − 2.5 = −1.5
        assert!((batch_loss(&pred, &recs, 1.0, PenaltyMode::Hinge) - (mse + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn indicator_penalty_adds_zero_or_lambda() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..200 {
            let recs: Vec<_> = (0..4)
                .map(|_| {
                    record(
                        [
                            rng.random_range(-1.0..1.0),
                            rng.random_range(0.5..1.5),
                            rng.random_range(-0.4..0.4),
                        ],
                        -2.0,
                        rng.random_range(1.0..8.0),
                    )
                })
                .collect();
            let preds: Vec<_> = (0..4)
                .map(|_| {
                    GevParams::new_unchecked(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0.2..1.5),
                        rng.random_range(-0.49..0.49),
                    )
                })
                .collect();
            let lambda = 2.5;
            let base = batch_loss(&preds, &recs, 0.0, PenaltyMode::Indicator);
            let diff = batch_loss(&preds, &recs, lambda, PenaltyMode::Indicator) - base;
            assert!(diff == 0.0 || (diff - lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_error_batch_has_zero_gradient() {
        let mut model = NetworkModel::initialize(&[6], OutputScales::default(), 1e-6, 9);
        for l in model.layers_mut() {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
        model.layers_mut()[1].biases[1] = 1.0;
        let recs = vec![record([0.0, 1.0, 0.0], -1.0, 1.0); 3];
        let (loss, g) = backward(&model, &recs, 1.0, PenaltyMode::Hinge);
        assert_eq!(loss, 0.0);
        assert!(g.iter_values().all(|v| v == 0.0));
    }

    fn random_batch(rng: &mut impl Rng, size: usize) -> Vec<TrainingRecord> {
        (0..size)
            .map(|_| {
                let mut pct: Vec<f64> = (0..PERCENTILE_COUNT)
                    .map(|_| rng.random_range(-2.0..3.0))
                    .collect();
                pct.sort_by(f64::total_cmp);
                let mut r = record(
                    [
                        rng.random_range(-0.5..0.5),
                        rng.random_range(0.3..1.2),
                        rng.random_range(-0.4..0.4),
                    ],
                    pct[0] - rng.random_range(0.0..4.0),
                    pct[10] + rng.random_range(0.0..6.0),
                );
                r.summary.percentiles.copy_from_slice(&pct);
                r
            })
            .collect()
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = stream_rng(17, 0);
        for trial in 0..5 {
            let mut model =
                NetworkModel::initialize(&[8], OutputScales { mu: 2.0, xi: 0.5 }, 1e-6, trial);
            for i in 0..model.parameter_count() {
                *model.parameter_mut(i) += rng.random_range(-0.3..0.3);
            }
            let recs = random_batch(&mut rng, 6);
            let (_, g) = backward(&model, &recs, 1.0, PenaltyMode::Hinge);
            let analytic: Vec<f64> = g.iter_values().collect();
            let loss_at = |m: &NetworkModel| {
                let preds = m.predict_batch(input_matrix(&recs).view());
                batch_loss(&preds, &recs, 1.0, PenaltyMode::Hinge)
            };
            let h = 1e-5;
            for (i, &a) in analytic.iter().enumerate() {
                let mut plus = model.clone();
                *plus.parameter_mut(i) += h;
                let mut minus = model.clone();
                *minus.parameter_mut(i) -= h;
                let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                assert!(rel < 1e-5, "trial {trial} param {i}: {a} vs {numeric}");
            }
        }
    }

    #[test]
    fn indicator_mode_gradient_ignores_penalty() {
        let model = NetworkModel::initialize(&[5], OutputScales::default(), 1e-6, 4);
        let recs = vec![record([0.0, 1.0, 0.0], -50.0, 50.0); 2];
        let (_, with) = backward(&model, &recs, 1.0, PenaltyMode::Indicator);
        let (_, without) = backward(&model, &recs, 0.0, PenaltyMode::Hinge);
        assert_eq!(with, without);
    }
}
