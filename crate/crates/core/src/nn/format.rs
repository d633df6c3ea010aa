//! Versioned JSON model container.
//!
//! ```text
//! {
//!   "format": "gevnet-model",
//!   "version": "v1",
//!   "standardization": "mean-iqr/type7",
//!   "input_dim": 11, "output_dim": 3,
//!   "percentiles": [0.0001, ..., 0.9999],
//!   "output_scales": {"mu": 10.0, "xi": 0.5},
//!   "sigma_floor": 1e-6,
//!   "layers": [{"in_dim": 11, "out_dim": 128, "activation": "relu",
//!               "weights": [row-major out_dim*in_dim], "biases": [out_dim]}, ...],
//!   "training": {"epochs": .., "best_epoch": .., ...}
//! }
//! ```
//!
//! Floats are written in shortest round-trip form and parsed with correct
//! rounding, so weights survive a save/load cycle bit for bit.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{
    Activation, DenseLayer, NetworkModel, OutputScales, TrainingMetadata, INPUT_DIM, OUTPUT_DIM,
};
use crate::error::{LoadError, Result};
use crate::summaries::PercentileSet;

pub const MODEL_FORMAT: &str = "gevnet-model";
pub const MODEL_VERSION: &str = "v1";
pub const STANDARDIZATION_TAG: &str = "mean-iqr/type7";

#[derive(Serialize, Deserialize)]
struct LayerFile {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: String,
    standardization: String,
    input_dim: usize,
    output_dim: usize,
    percentiles: PercentileSet,
    output_scales: OutputScales,
    sigma_floor: f64,
    layers: Vec<LayerFile>,
    training: TrainingMetadata,
}

pub fn serialize(model: &NetworkModel) -> Vec<u8> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION.into(),
        standardization: STANDARDIZATION_TAG.into(),
        input_dim: INPUT_DIM,
        output_dim: OUTPUT_DIM,
        percentiles: *model.percentile_set(),
        output_scales: model.output_scales(),
        sigma_floor: model.sigma_floor(),
        layers: model
            .layers()
            .iter()
            .map(|l| LayerFile {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                activation: l.activation,
                weights: l.weights.iter().copied().collect(),
                biases: l.biases.to_vec(),
            })
            .collect(),
        training: model.metadata.clone(),
    };
    let mut bytes = serde_json::to_vec(&file).expect("model is serializable");
    bytes.push(b'\n');
    bytes
}

pub fn deserialize(bytes: &[u8]) -> Result<NetworkModel, LoadError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| LoadError::Corrupt(e.to_string()))?;
    match value.get("format").and_then(|v| v.as_str()) {
        Some(MODEL_FORMAT) => {}
        other => {
            return Err(LoadError::Corrupt(format!(
                "not a model file (format tag {other:?})"
            )))
        }
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| LoadError::Corrupt("missing version tag".into()))?;
    if version != MODEL_VERSION {
        return Err(LoadError::Version {
            found: version.into(),
            expected: MODEL_VERSION.into(),
        });
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| LoadError::Corrupt(e.to_string()))?;
    if file.standardization != STANDARDIZATION_TAG {
        return Err(LoadError::Corrupt(format!(
            "unknown standardization convention {:?}",
            file.standardization
        )));
    }
    if file.input_dim != INPUT_DIM || file.output_dim != OUTPUT_DIM {
        return Err(LoadError::Dimension(format!(
            "model maps {} → {}, expected {INPUT_DIM} → {OUTPUT_DIM}",
            file.input_dim, file.output_dim
        )));
    }
    let layers = file
        .layers
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let weights =
                Array2::from_shape_vec((l.out_dim, l.in_dim), l.weights).map_err(|_| {
                    LoadError::Dimension(format!(
                        "layer {i}: weight count does not match {}×{}",
                        l.out_dim, l.in_dim
                    ))
                })?;
            if l.biases.len() != l.out_dim {
                return Err(LoadError::Dimension(format!(
                    "layer {i}: expected {} biases",
                    l.out_dim
                )));
            }
            Ok(DenseLayer {
                weights,
                biases: Array1::from(l.biases),
                activation: l.activation,
            })
        })
        .collect::<Result<Vec<_>, LoadError>>()?;
    let mut model = NetworkModel::new(
        layers,
        file.output_scales,
        file.sigma_floor,
        file.percentiles,
    )?;
    model.metadata = file.training;
    Ok(model)
}

pub fn save(model: &NetworkModel, path: &Path) -> Result<()> {
    std::fs::write(path, serialize(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<NetworkModel> {
    let bytes = std::fs::read(path)?;
    Ok(deserialize(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn model() -> NetworkModel {
        let mut m = NetworkModel::initialize(&[16, 8], OutputScales::default(), 1e-6, 21);
        let mut rng = stream_rng(4, 0);
        for l in m.layers_mut() {
            l.biases.mapv_inplace(|_| rng.random_range(-1.0..1.0) / 3.0);
        }
        m.metadata = TrainingMetadata {
            epochs: 12,
            best_epoch: Some(7),
            final_validation_loss: Some(0.0123),
            training_seconds: None,
            scenario: Some("fixed".into()),
        };
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let back = deserialize(&serialize(&m)).unwrap();
        assert_eq!(back, m);
        let mut rng = stream_rng(8, 0);
        for _ in 0..100 {
            let x: Vec<f64> = (0..INPUT_DIM)
                .map(|_| rng.random_range(-5.0..5.0))
                .collect();
            let (ra, pa) = m.forward(&x).unwrap();
            let (rb, pb) = back.forward(&x).unwrap();
            assert_eq!(ra.map(f64::to_bits), rb.map(f64::to_bits));
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let bytes = serialize(&model());
        let err = deserialize(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(matches!(err, LoadError::Corrupt(_)), "{err:?}");
        assert!(matches!(
            deserialize(b"not json"),
            Err(LoadError::Corrupt(_))
        ));
    }

    #[test]
    fn old_version_is_rejected() {
        let text = String::from_utf8(serialize(&model())).unwrap().replacen(
            "\"version\":\"v1\"",
            "\"version\":\"v0\"",
            1,
        );
        assert_eq!(
            deserialize(text.as_bytes()).unwrap_err(),
            LoadError::Version {
                found: "v0".into(),
                expected: "v1".into()
            }
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut v: serde_json::Value = serde_json::from_slice(&serialize(&model())).unwrap();
        v["layers"][1]["in_dim"] = 15.into();
        v["layers"][1]["weights"] = serde_json::Value::Array(vec![0.0.into(); 8 * 15]);
        let err = deserialize(&serde_json::to_vec(&v).unwrap()).unwrap_err();
        assert!(matches!(err, LoadError::Dimension(_)), "{err:?}");

        let mut v: serde_json::Value = serde_json::from_slice(&serialize(&model())).unwrap();
        v["input_dim"] = 12.into();
        assert!(matches!(
            deserialize(&serde_json::to_vec(&v).unwrap()),
            Err(LoadError::Dimension(_))
        ));
    }
}
