//! Output-layer activation functions.
//!
//! Hidden layers always use ReLU; the output unit can additionally be warped
//! so the network's range matches the target quantity (for example, waiting
//! times are non-negative, so a softplus output keeps predictions positive
//! without clipping gradients).

use serde::{Deserialize, Serialize};

/// Activation applied to the single output unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    /// `f(z) = z` — unconstrained regression.
    Identity,
    /// `f(z) = e^z` — strictly positive, multiplicative targets.
    Exponential,
    /// `f(z) = ln(1 + e^z)` — strictly positive, asymptotically linear.
    Softplus,
}

impl OutputActivation {
    /// Evaluate the activation at `z`.
    pub fn eval(self, z: f64) -> f64 {
        match self {
            OutputActivation::Identity => z,
            OutputActivation::Exponential => z.exp(),
            OutputActivation::Softplus => softplus(z),
        }
    }

    /// Derivative of the activation at `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            OutputActivation::Identity => 1.0,
            OutputActivation::Exponential => z.exp(),
            // d/dz ln(1 + e^z) = sigmoid(z), itself evaluated stably.
            OutputActivation::Softplus => sigmoid(z),
        }
    }
}

/// Overflow-safe softplus: for large `z` the function is numerically `z`
/// (the `e^{-z}` correction vanishes below f64 resolution), and for very
/// negative `z` it is numerically `e^z`.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// Overflow-safe logistic sigmoid.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ReLU used by all hidden layers.
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Subgradient of ReLU, with the convention `relu'(0) = 0`.
pub fn relu_derivative(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}
