//! Fast estimation of Generalized Extreme Value (GEV) parameters with a
//! neural network that reads 11 standardized sample percentiles, alongside a
//! Nelder–Mead maximum-likelihood baseline and parametric-bootstrap intervals.

pub mod bootstrap;
pub mod error;
pub mod evaluation;
pub mod gev;
pub mod io;
pub mod mle;
pub mod nn;
pub mod rng;
pub mod summaries;
pub mod training;

pub use error::{Error, LoadError, Result};
pub use gev::{GevParams, GevSample};
pub use nn::NetworkModel;
pub use summaries::{PercentileSet, QuantileSummary, StandardizationInfo};
