//! Multi-layer perceptron with mini-batch SGD training.
//!
//! Hidden layers use ReLU; the output layer is a single unit whose activation
//! is configurable (see [`OutputActivation`]).  Training minimises the halved
//! squared error `½(ŷ − y)²` per sample (so the output-layer gradient is the
//! plain residual), while all *reported* losses are conventional MSE.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::activation::{relu, relu_derivative, OutputActivation};
use super::{BackendError, DataPoint, Regressor};
use crate::rng::{mix_seed, rng_from_seed};

/// Hyperparameters of the network and its SGD training schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHyper {
    /// Widths of the hidden layers, input to output.
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    /// Passes over the training data per fit call.
    pub epochs: usize,
    pub batch_size: usize,
    pub output_activation: OutputActivation,
    /// Seed for the weight initialisation (fixed per model, so rebuilding the
    /// same spec yields identical starting weights).
    pub init_seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            hidden_layers: vec![32, 32],
            learning_rate: 0.01,
            epochs: 30,
            batch_size: 32,
            output_activation: OutputActivation::Identity,
            init_seed: 7,
        }
    }
}

/// One fully-connected layer; `weights[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros_like(other: &Layer) -> Layer {
        Layer {
            weights: other
                .weights
                .iter()
                .map(|row| vec![0.0; row.len()])
                .collect(),
            biases: vec![0.0; other.biases.len()],
        }
    }
}

/// Fully-connected network with a single output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub hyper: MlpHyper,
    pub layers: Vec<Layer>,
    input_dim: usize,
    /// Number of completed fit calls; salts the shuffle seed so consecutive
    /// updates do not replay the same batch order.
    pub updates: u64,
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Trace {
    /// `activations[0]` is the input; `activations[l]` the output of layer l.
    activations: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Build a network with He-initialised weights and zero biases.
    pub fn new(input_dim: usize, hyper: &MlpHyper) -> Result<Self, BackendError> {
        if input_dim == 0 {
            return Err(BackendError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if !(hyper.learning_rate > 0.0) {
            return Err(BackendError::NonPositiveHyper {
                name: "learning_rate",
                value: hyper.learning_rate,
            });
        }
        if hyper.epochs == 0 {
            return Err(BackendError::NonPositiveHyper {
                name: "epochs",
                value: 0.0,
            });
        }
        if hyper.batch_size == 0 {
            return Err(BackendError::NonPositiveHyper {
                name: "batch_size",
                value: 0.0,
            });
        }
        if hyper.hidden_layers.iter().any(|&w| w == 0) {
            return Err(BackendError::EmptyNetwork);
        }

        let mut sizes = Vec::with_capacity(hyper.hidden_layers.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(&hyper.hidden_layers);
        sizes.push(1);

        let mut rng = rng_from_seed(hyper.init_seed);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
                .expect("he std is finite and positive");
            let weights = (0..fan_out)
                .map(|_| (0..fan_in).map(|_| dist.sample(&mut rng)).collect())
                .collect();
            layers.push(Layer {
                weights,
                biases: vec![0.0; fan_out],
            });
        }
        Ok(Self {
            hyper: hyper.clone(),
            layers,
            input_dim,
            updates: 0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Layer widths from input to output, e.g. `[6, 32, 32, 1]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim];
        sizes.extend(self.layers.iter().map(|l| l.biases.len()));
        sizes
    }

    fn check_dims(&self, x: &[f64]) -> Result<(), BackendError> {
        if x.len() != self.input_dim {
            return Err(BackendError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Result<Trace, BackendError> {
        self.check_dims(x)?;
        let n_layers = self.layers.len();
        let mut activations = Vec::with_capacity(n_layers + 1);
        let mut pre = Vec::with_capacity(n_layers);
        activations.push(x.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let input = &activations[l];
            let z: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.biases)
                .map(|(row, b)| row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + b)
                .collect();
            let a = if l + 1 == n_layers {
                vec![self.hyper.output_activation.eval(z[0])]
            } else {
                z.iter().map(|&v| relu(v)).collect()
            };
            pre.push(z);
            activations.push(a);
        }
        Ok(Trace { activations, pre })
    }

    /// Forward pass producing the scalar prediction.
    pub fn forward(&self, x: &[f64]) -> Result<f64, BackendError> {
        Ok(self.trace(x)?.activations.last().expect("output layer")[0])
    }

    /// Gradient of the mean halved squared error over `batch`, with the same
    /// shape as `self.layers`.  Public so that callers can verify the
    /// backpropagation against finite differences.
    pub fn gradient(&self, batch: &[&DataPoint]) -> Result<Vec<Layer>, BackendError> {
        let mut grads: Vec<Layer> = self.layers.iter().map(Layer::zeros_like).collect();
        let n_layers = self.layers.len();
        for point in batch {
            let trace = self.trace(&point.x)?;
            let output = trace.activations[n_layers][0];
            let residual = output - point.y;
            // delta = dLoss/dz for the current layer, starting at the output.
            let z_out = trace.pre[n_layers - 1][0];
            let mut delta =
                vec![residual * self.hyper.output_activation.derivative(z_out)];
            for l in (0..n_layers).rev() {
                let input = &trace.activations[l];
                for (j, d) in delta.iter().enumerate() {
                    for (i, a) in input.iter().enumerate() {
                        grads[l].weights[j][i] += d * a;
                    }
                    grads[l].biases[j] += d;
                }
                if l > 0 {
                    let layer = &self.layers[l];
                    delta = (0..input.len())
                        .map(|i| {
                            let back: f64 = delta
                                .iter()
                                .enumerate()
                                .map(|(j, d)| d * layer.weights[j][i])
                                .sum();
                            back * relu_derivative(trace.pre[l - 1][i])
                        })
                        .collect();
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for g in &mut grads {
            for row in &mut g.weights {
                for w in row {
                    *w *= scale;
                }
            }
            for b in &mut g.biases {
                *b *= scale;
            }
        }
        Ok(grads)
    }

    fn apply_gradient(&mut self, grads: &[Layer], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (row, grow) in layer.weights.iter_mut().zip(&g.weights) {
                for (w, gw) in row.iter_mut().zip(grow) {
                    *w -= lr * gw;
                }
            }
            for (b, gb) in layer.biases.iter_mut().zip(&g.biases) {
                *b -= lr * gb;
            }
        }
    }

    /// Run the configured SGD schedule on `data`, continuing from the current
    /// weights.  `shuffle_seed` drives the per-epoch batch order.
    ///
    /// Aborts with [`BackendError::NonFiniteLoss`] as soon as the epoch loss
    /// stops being finite, leaving the model in the diverged state (callers
    /// that need rollback should train a clone; see `BackendModel::fit`).
    pub fn train(&mut self, data: &[DataPoint], shuffle_seed: u64) -> Result<(), BackendError> {
        self.train_with(
            data,
            self.hyper.learning_rate,
            self.hyper.epochs,
            self.hyper.batch_size,
            shuffle_seed,
        )
    }

    /// [`MlpModel::train`] with an explicit SGD schedule.
    pub fn train_with(
        &mut self,
        data: &[DataPoint],
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
        shuffle_seed: u64,
    ) -> Result<(), BackendError> {
        if data.is_empty() {
            return Err(BackendError::EmptyData);
        }
        if batch_size == 0 {
            return Err(BackendError::NonPositiveHyper {
                name: "batch_size",
                value: 0.0,
            });
        }
        for p in data {
            self.check_dims(&p.x)?;
        }
        let mut rng = rng_from_seed(mix_seed(shuffle_seed, self.updates));
        let mut order: Vec<usize> = (0..data.len()).collect();
        for epoch in 0..epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch_size) {
                let batch: Vec<&DataPoint> = chunk.iter().map(|&i| &data[i]).collect();
                let grads = self.gradient(&batch)?;
                self.apply_gradient(&grads, learning_rate);
            }
            // Raw forward values, not `predict`: a diverged network must be
            // reported as a training failure, not a prediction error.
            let mut loss = 0.0;
            for p in data {
                let err = self.forward(&p.x)? - p.y;
                loss += err * err;
            }
            loss /= data.len() as f64;
            if !loss.is_finite() {
                return Err(BackendError::NonFiniteLoss { epoch });
            }
        }
        self.updates += 1;
        Ok(())
    }
}

impl Regressor for MlpModel {
    fn predict(&self, x: &[f64]) -> Result<f64, BackendError> {
        let y = self.forward(x)?;
        if !y.is_finite() {
            return Err(BackendError::NonFinitePrediction);
        }
        Ok(y)
    }
}
