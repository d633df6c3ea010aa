use ndarray::{Array1, Array2};

use super::{Gradients, NetworkModel};

/// RMSprop on flat slices: `v ← ρv + (1−ρ)g²`, `w ← w − η·g/(√v + ε)`.
pub fn rmsprop_update(
    params: &mut [f64],
    accum: &mut [f64],
    grads: &[f64],
    lr: f64,
    rho: f64,
    eps: f64,
) {
    debug_assert!(params.len() == accum.len() && params.len() == grads.len());
    for ((w, v), &g) in params.iter_mut().zip(accum.iter_mut()).zip(grads) {
        *v = rho * *v + (1.0 - rho) * g * g;
        *w -= lr * g / (v.sqrt() + eps);
    }
}

/// Squared-gradient accumulators plus RMSprop hyperparameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    accum: Vec<(Array2<f64>, Array1<f64>)>,
}

impl OptimizerState {
    pub const DEFAULT_LR: f64 = 0.001;
    pub const DEFAULT_RHO: f64 = 0.9;
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(model: &NetworkModel, lr: f64, rho: f64, eps: f64) -> Self {
        let accum = model
            .layers()
            .iter()
            .map(|l| {
                (
                    Array2::zeros(l.weights.raw_dim()),
                    Array1::zeros(l.biases.len()),
                )
            })
            .collect();
        Self {
            lr,
            rho,
            eps,
            accum,
        }
    }

    pub fn with_defaults(model: &NetworkModel) -> Self {
        Self::new(
            model,
            Self::DEFAULT_LR,
            Self::DEFAULT_RHO,
            Self::DEFAULT_EPS,
        )
    }

    pub fn accumulators(&self) -> impl Iterator<Item = f64> + '_ {
        self.accum
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
    }

    /// Apply one update to `model` in place.
    pub fn step(&mut self, model: &mut NetworkModel, grads: &Gradients) {
        assert_eq!(self.accum.len(), grads.layers.len(), "gradient layer count");
        let (lr, rho, eps) = (self.lr, self.rho, self.eps);
        for ((layer, (vw, vb)), g) in model
            .layers_mut()
            .iter_mut()
            .zip(&mut self.accum)
            .zip(&grads.layers)
        {
            assert_eq!(layer.weights.shape(), g.weights.shape(), "gradient shape");
            ndarray::Zip::from(&mut layer.weights)
                .and(vw)
                .and(&g.weights)
                .for_each(|w, v, &gr| {
                    *v = rho * *v + (1.0 - rho) * gr * gr;
                    *w -= lr * gr / (v.sqrt() + eps);
                });
            ndarray::Zip::from(&mut layer.biases)
                .and(vb)
                .and(&g.biases)
                .for_each(|w, v, &gr| {
                    *v = rho * *v + (1.0 - rho) * gr * gr;
                    *w -= lr * gr / (v.sqrt() + eps);
                });
        }
    }
}
