//! Regression backends trained online from simulation traces.
//!
//! Three interchangeable model families sit behind the [`Regressor`] trait:
//!
//! * [`ConstantModel`] — predicts a fixed value; the no-learning baseline.
//! * [`mlp::MlpModel`] — a small fully-connected network trained with
//!   mini-batch SGD.
//! * [`knn::KnnModel`] — brute-force k-nearest-neighbour regression over the
//!   stored training set.
//!
//! [`replay::ReplayBuffer`] keeps the last few batches of training data so a
//! model can be refit on a sliding window, and [`eval`] provides the
//! train/test split and MSE/MAE evaluation shared by all backends.

pub mod activation;
pub mod eval;
pub mod knn;
pub mod mlp;
pub mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::mix_seed;
pub use activation::OutputActivation;
pub use eval::{evaluate, split_dataset, EvalReport};
pub use knn::KnnModel;
pub use mlp::{MlpHyper, MlpModel};
pub use replay::ReplayBuffer;

/// One supervised sample: a feature vector and a scalar label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

impl DataPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// Errors produced by model construction, training and prediction.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("input has {got} dimensions, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operation requires a non-empty dataset")]
    EmptyData,
    #[error("model has no stored data to predict from")]
    EmptyModel,
    #[error("k must be at least 1 for k-nearest-neighbour regression")]
    InvalidK,
    #[error("constant model value must be finite, got {0}")]
    NonFiniteConstant(f64),
    #[error("training loss became non-finite in epoch {epoch}; training aborted")]
    NonFiniteLoss { epoch: usize },
    #[error("prediction is non-finite")]
    NonFinitePrediction,
    #[error("test fraction must lie in [0, 1], got {0}")]
    InvalidTestFraction(f64),
    #[error("network needs at least one layer")]
    EmptyNetwork,
    #[error("hyperparameter {name} must be positive, got {value}")]
    NonPositiveHyper { name: &'static str, value: f64 },
}

/// Common prediction interface implemented by every backend.
pub trait Regressor {
    /// Predict the label for one encoded feature vector.
    fn predict(&self, x: &[f64]) -> Result<f64, BackendError>;
}

/// Model family plus hyperparameters, as declared in configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    /// Always predict `value`; training only reports the loss.
    Constant { value: f64 },
    /// Multi-layer perceptron trained with mini-batch SGD.
    Mlp {
        #[serde(flatten)]
        hyper: MlpHyper,
    },
    /// Brute-force k-nearest-neighbour regression.
    Knn { k: usize },
}

impl BackendKind {
    /// Instantiate the (untrained) runtime model for `input_dim` features.
    pub fn build(&self, input_dim: usize) -> Result<BackendModel, BackendError> {
        match self {
            BackendKind::Constant { value } => {
                Ok(BackendModel::Constant(ConstantModel::new(*value)?))
            }
            BackendKind::Mlp { hyper } => {
                Ok(BackendModel::Mlp(MlpModel::new(input_dim, hyper)?))
            }
            BackendKind::Knn { k } => Ok(BackendModel::Knn(KnnModel::new(input_dim, *k)?)),
        }
    }
}

/// Runtime state of a backend model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendModel {
    Constant(ConstantModel),
    Mlp(MlpModel),
    Knn(KnnModel),
}

/// Outcome of one training update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Number of samples the update was fit on (the whole replay window).
    pub n_samples: usize,
    /// Plain mean-squared error over those samples after the update.
    pub loss: f64,
}

impl BackendModel {
    /// Fit (or refit) the model on `data`.
    ///
    /// * constant — ignores the data, reports its loss on it;
    /// * MLP — continues SGD from the current weights, shuffling with
    ///   `seed`;
    /// * k-NN — replaces the stored training set.
    ///
    /// On error the model is left unchanged.
    pub fn fit(&mut self, data: &[DataPoint], seed: u64) -> Result<FitReport, BackendError> {
        match self {
            BackendModel::Constant(m) => Ok(FitReport {
                n_samples: data.len(),
                loss: mean_squared_error(m, data)?,
            }),
            BackendModel::Mlp(m) => {
                if data.is_empty() {
                    return Err(BackendError::EmptyData);
                }
                let mut candidate = m.clone();
                candidate.train(data, seed)?;
                let loss = mean_squared_error(&candidate, data)?;
                *m = candidate;
                Ok(FitReport {
                    n_samples: data.len(),
                    loss,
                })
            }
            BackendModel::Knn(m) => {
                if data.is_empty() {
                    return Err(BackendError::EmptyData);
                }
                m.set_data(data)?;
                let loss = mean_squared_error(m, data)?;
                Ok(FitReport {
                    n_samples: data.len(),
                    loss,
                })
            }
        }
    }

    /// Feature dimension the model accepts, if it is dimension-checked.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            BackendModel::Constant(_) => None,
            BackendModel::Mlp(m) => Some(m.input_dim()),
            BackendModel::Knn(m) => Some(m.input_dim()),
        }
    }
}

impl Regressor for BackendModel {
    fn predict(&self, x: &[f64]) -> Result<f64, BackendError> {
        match self {
            BackendModel::Constant(m) => m.predict(x),
            BackendModel::Mlp(m) => m.predict(x),
            BackendModel::Knn(m) => m.predict(x),
        }
    }
}

/// Plain (unhalved) mean-squared error of `model` over `data`.
///
/// Returns 0 for an empty dataset so that loss reporting on a no-op update is
/// well defined.
pub fn mean_squared_error(
    model: &impl Regressor,
    data: &[DataPoint],
) -> Result<f64, BackendError> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for p in data {
        let err = model.predict(&p.x)? - p.y;
        acc += err * err;
    }
    Ok(acc / data.len() as f64)
}

/// Model that predicts the same value for every input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantModel {
    pub value: f64,
}

impl ConstantModel {
    pub fn new(value: f64) -> Result<Self, BackendError> {
        if !value.is_finite() {
            return Err(BackendError::NonFiniteConstant(value));
        }
        Ok(Self { value })
    }
}

impl Regressor for ConstantModel {
    fn predict(&self, _x: &[f64]) -> Result<f64, BackendError> {
        Ok(self.value)
    }
}

/// Deterministic per-update training seed for the `update_index`-th refit of
/// the model owned by `owner_seed`.
pub fn training_seed(owner_seed: u64, update_index: u64) -> u64 {
    mix_seed(owner_seed, 0x7261_u64 ^ update_index)
}
