//! Dense feedforward network mapping 11 standardized percentiles to
//! standardized GEV parameters.
//!
//! Layers compute `h = f(b + W·h_prev)` with `W` stored row-major as
//! `(out_dim, in_dim)`. The last layer is linear followed by the composite
//! output activation of [`output_activation`]: tanh-scaled location,
//! floored relu scale, tanh-scaled shape.

mod format;
mod loss;
mod optim;

pub use format::{
    deserialize, load, save, serialize, MODEL_FORMAT, MODEL_VERSION, STANDARDIZATION_TAG,
};
pub(crate) use loss::input_matrix;
pub use loss::{backward, batch_loss, output_activation, Gradients, PenaltyMode, TrainingRecord};
pub use optim::{rmsprop_update, OptimizerState};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LoadError, Result};
use crate::gev::GevParams;
use crate::rng::stream_rng;
use crate::summaries::{PercentileSet, PERCENTILE_COUNT};

pub const INPUT_DIM: usize = PERCENTILE_COUNT;
pub const OUTPUT_DIM: usize = 3;

/// Hidden widths of the reference architecture: 11→128→128→128→128→3.
pub const DEFAULT_HIDDEN: [usize; 4] = [128, 128, 128, 128];

pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
    /// Identity on the layer itself; the model applies [`output_activation`].
    CustomOutput,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            // NaN passes through so that divergence shows up in the loss
            Activation::Relu => {
                if z < 0.0 {
                    0.0
                } else {
                    z
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Linear | Activation::CustomOutput => z,
        }
    }

    /// Derivative given the pre-activation `z` and activation `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear | Activation::CustomOutput => 1.0,
        }
    }
}

/// Multipliers applied to `tanh` for the location and shape outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputScales {
    pub mu: f64,
    pub xi: f64,
}

impl Default for OutputScales {
    fn default() -> Self {
        Self { mu: 10.0, xi: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Glorot-uniform weights, zero biases.
    fn glorot<R: Rng>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = Array2::from_shape_fn((out_dim, in_dim), |_| rng.random_range(-limit..limit));
        Self {
            weights,
            biases: Array1::zeros(out_dim),
            activation,
        }
    }
}

/// Bookkeeping recorded by the training loop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub best_epoch: Option<usize>,
    pub final_validation_loss: Option<f64>,
    pub training_seconds: Option<f64>,
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    layers: Vec<DenseLayer>,
    output_scales: OutputScales,
    sigma_floor: f64,
    pset: PercentileSet,
    pub metadata: TrainingMetadata,
}

/// Per-layer intermediate values from a batched forward pass.
pub(crate) struct Trace {
    /// `inputs[l]` is the `(batch, in_dim)` input of layer `l`; the final
    /// entry is the raw network output.
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activations of each layer.
    pub pre: Vec<Array2<f64>>,
}

impl NetworkModel {
    pub fn new(
        layers: Vec<DenseLayer>,
        output_scales: OutputScales,
        sigma_floor: f64,
        pset: PercentileSet,
    ) -> Result<Self, LoadError> {
        let first = layers
            .first()
            .ok_or_else(|| LoadError::Dimension("model has no layers".into()))?;
        if first.in_dim() != INPUT_DIM {
            return Err(LoadError::Dimension(format!(
                "input layer expects {} inputs, model input is {INPUT_DIM}",
                first.in_dim()
            )));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(LoadError::Dimension(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.biases.len() != layer.out_dim() {
                return Err(LoadError::Dimension(format!(
                    "layer {i} has {} biases for {} outputs",
                    layer.biases.len(),
                    layer.out_dim()
                )));
            }
        }
        let last = layers.last().expect("nonempty");
        if last.out_dim() != OUTPUT_DIM || last.activation != Activation::CustomOutput {
            return Err(LoadError::Dimension(format!(
                "output layer must produce {OUTPUT_DIM} values with the custom output activation"
            )));
        }
        if let Some(i) = layers[..layers.len() - 1]
            .iter()
            .position(|l| l.activation == Activation::CustomOutput)
        {
            return Err(LoadError::Dimension(format!(
                "hidden layer {i} uses the output activation"
            )));
        }
        if !(output_scales.mu.is_finite() && output_scales.xi.is_finite())
            || output_scales.mu <= 0.0
            || output_scales.xi <= 0.0
        {
            return Err(LoadError::Corrupt(
                "output scales must be finite and positive".into(),
            ));
        }
        if !(sigma_floor > 0.0 && sigma_floor.is_finite()) {
            return Err(LoadError::Corrupt("sigma floor must be positive".into()));
        }
        Ok(Self {
            layers,
            output_scales,
            sigma_floor,
            pset,
            metadata: TrainingMetadata::default(),
        })
    }

    /// Fresh relu network `11 → hidden… → 3` with seeded Glorot initialization.
    pub fn initialize(
        hidden: &[usize],
        output_scales: OutputScales,
        sigma_floor: f64,
        seed: u64,
    ) -> Self {
        let mut rng = stream_rng(seed, 0);
        let mut dims = vec![INPUT_DIM];
        dims.extend_from_slice(hidden);
        dims.push(OUTPUT_DIM);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let act = if i == last {
                    Activation::CustomOutput
                } else {
                    Activation::Relu
                };
                DenseLayer::glorot(d[0], d[1], act, &mut rng)
            })
            .collect();
        Self::new(
            layers,
            output_scales,
            sigma_floor,
            PercentileSet::standard(),
        )
        .expect("initialize builds consistent dimensions")
    }

    /// The 11→128→128→128→128→3 reference architecture.
    pub fn default_architecture(seed: u64) -> Self {
        Self::initialize(
            &DEFAULT_HIDDEN,
            OutputScales::default(),
            DEFAULT_SIGMA_FLOOR,
            seed,
        )
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn output_scales(&self) -> OutputScales {
        self.output_scales
    }

    pub fn sigma_floor(&self) -> f64 {
        self.sigma_floor
    }

    pub fn percentile_set(&self) -> &PercentileSet {
        &self.pset
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    /// Parameter `index` in flat order: layer by layer, row-major weights
    /// then biases (the order of [`Gradients::iter_values`]).
    pub fn parameter_mut(&mut self, index: usize) -> &mut f64 {
        let mut offset = index;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            if offset < nw {
                let cols = layer.weights.ncols();
                return &mut layer.weights[[offset / cols, offset % cols]];
            }
            offset -= nw;
            if offset < layer.biases.len() {
                return &mut layer.biases[offset];
            }
            offset -= layer.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    pub(crate) fn trace(&self, inputs: ArrayView2<f64>) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        acts.push(inputs.to_owned());
        for layer in &self.layers {
            let prev = acts.last().expect("nonempty");
            let mut z = prev.dot(&layer.weights.t());
            z += &layer.biases;
            let a = z.mapv(|v| layer.activation.apply(v));
            pre.push(z);
            acts.push(a);
        }
        Trace { inputs: acts, pre }
    }

    /// Raw `(batch, 3)` outputs for a `(batch, 11)` input matrix.
    pub fn forward_raw_batch(&self, inputs: ArrayView2<f64>) -> Array2<f64> {
        let mut h = inputs.to_owned();
        for layer in &self.layers {
            let mut z = h.dot(&layer.weights.t());
            z += &layer.biases;
            z.mapv_inplace(|v| layer.activation.apply(v));
            h = z;
        }
        h
    }

    /// Standardized parameter predictions for a `(batch, 11)` input matrix.
    pub fn predict_batch(&self, inputs: ArrayView2<f64>) -> Vec<GevParams> {
        self.forward_raw_batch(inputs)
            .axis_iter(Axis(0))
            .map(|row| {
                output_activation(
                    [row[0], row[1], row[2]],
                    self.output_scales,
                    self.sigma_floor,
                )
            })
            .collect()
    }

    /// Raw output and standardized parameters for one input vector.
    pub fn forward(&self, input: &[f64]) -> Result<([f64; OUTPUT_DIM], GevParams)> {
        if input.len() != INPUT_DIM {
            return Err(Error::Domain(format!(
                "expected {INPUT_DIM} inputs, got {}",
                input.len()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("network input must be finite".into()));
        }
        let x = ArrayView2::from_shape((1, INPUT_DIM), input).expect("shape checked");
        let out = self.forward_raw_batch(x);
        let raw = [out[[0, 0]], out[[0, 1]], out[[0, 2]]];
        Ok((
            raw,
            output_activation(raw, self.output_scales, self.sigma_floor),
        ))
    }
}
