//! Experiment harness: the iterative simulate-train loop, grid searches over
//! rule parameters, Pareto-front extraction and seed aggregation, plus the
//! TOML configuration surface shared with the command line.
//!
//! Every entry point is a pure function of (configuration, seeds): rerunning
//! with the same inputs reproduces output files byte for byte.

mod config;
mod pareto;
mod sweep;
mod training;

pub use config::{
    BackendChoice, BatteryBound, ChargingSection, CollectorChoice, EstimatorConfig, EstimatorRole,
    ExperimentConfig, ExperimentSection, GuardChoice, ProtectionSection, Scenario, Selection,
    SweepSection,
};
pub use pareto::{aggregate, pareto_flags, pareto_front, UtilityPoint};
pub use sweep::{bcf_grid, grid_search_bcf, grid_search_constant, SweepResult, SweepRow};
pub use training::{
    iterative_training, EstimatorIterEval, IterationRow, TrainingOutcome,
};

use thiserror::Error;

use crate::backends::BackendError;
use crate::estimator::EstimatorError;
use crate::world::WorldError;

/// Harness failures, split by exit class: configuration problems are the
/// caller's to fix before anything runs (exit 2), the rest are runtime
/// failures (exit 1).
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("an empty point set has no Pareto front")]
    EmptyPoints,
}

impl HarnessError {
    /// Shortcut for configuration errors.
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    /// Process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
