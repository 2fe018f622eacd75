//! The iterative simulate-train loop: run simulations with the current
//! estimator versions, collect their datasets, hold out a test share for the
//! report, refit on the replay window, repeat — then select a version by
//! recency or composite utility.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::backends::{evaluate, split_dataset, DataPoint};
use crate::estimator::{EstimatorHandle, TrainingSample};
use crate::rng::{hash_seed, mix_seed};
use crate::world::run_simulation;

use super::config::{ExperimentConfig, Scenario, Selection};
use super::HarnessError;

/// Sub-stream label for the per-iteration train/test shuffles.
const SPLIT_STREAM: &str = "iteration-split";

/// One line of the training report: the utility the running estimator
/// version achieved and how its held-out evaluation looked.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub mean_damage: f64,
    pub mean_survived: f64,
    /// Held-out mean squared error of the scenario's primary estimator
    /// (NaN when there was nothing to evaluate).
    pub estimator_mse: f64,
    /// Samples rejected across all estimators this iteration (guard
    /// failures, censoring, unresolved windows).
    pub discarded_samples: u64,
    /// Mean waiting-time forecast the charging rule queried, if any.
    pub mean_predicted_waiting: Option<f64>,
    /// Composite utility: survived fraction minus damage rate.
    pub utility: f64,
    /// True if a model update failed this iteration (the previous model
    /// carried on).
    pub training_failed: bool,
}

/// Held-out evaluation of one estimator in one iteration.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorIterEval {
    pub id: String,
    pub mse: f64,
    pub mae: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Everything `iterative_training` produces.
#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub rows: Vec<IterationRow>,
    /// Per-iteration, per-estimator held-out evaluations (registration
    /// order).
    pub evals: Vec<Vec<EstimatorIterEval>>,
    /// Iteration whose estimator version was selected.
    pub selected_iteration: usize,
    /// The selected estimator versions, in registration order.
    pub selected: Vec<EstimatorHandle>,
}

impl TrainingOutcome {
    /// The selected version of the estimator named `id`.
    pub fn selected_estimator(&self, id: &str) -> Option<&EstimatorHandle> {
        self.selected.iter().find(|h| h.spec.id == id)
    }

    /// Write the per-iteration report:
    /// `iteration,mean_damage,mean_survived,estimator_mse,discarded_samples`.
    pub fn write_report_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = Vec::new();
        writeln!(out, "iteration,mean_damage,mean_survived,estimator_mse,discarded_samples")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.iteration,
                row.mean_damage,
                row.mean_survived,
                row.estimator_mse,
                row.discarded_samples
            )?;
        }
        std::fs::write(path, out)
    }
}

/// Index of the estimator the scenario's rule consults, if any; falls back
/// to the first registered one.
fn primary_estimator(cfg: &ExperimentConfig) -> Option<&str> {
    let named = match cfg.experiment.scenario {
        Scenario::Charging => cfg
            .charging
            .waiting_estimator
            .as_deref()
            .or(cfg.charging.battery_estimator.as_deref()),
        Scenario::Protection => cfg.protection.birds_estimator.as_deref(),
    };
    named.or_else(|| cfg.estimators.first().map(|e| e.id.as_str()))
}

/// Run the simulate-train loop for `cfg` under `base_seed`.
///
/// Iteration 0 runs on bootstrap estimators; every later iteration first
/// refits each estimator on the replay window extended by the previous
/// iteration's training split, then re-runs the simulations.  Run `r` of
/// every iteration uses the seed derived from `(base_seed, r)`, so utility
/// changes across iterations come from the models alone.  A failed model
/// update is recorded and the previous model carries on.
pub fn iterative_training(
    cfg: &ExperimentConfig,
    base_seed: u64,
) -> Result<TrainingOutcome, HarnessError> {
    let mut set = cfg.build_estimator_set()?;
    let policy = cfg.build_policy(&set)?;
    let exp = &cfg.experiment;
    if exp.n_iterations < 1 {
        return Err(HarnessError::config("experiment.n_iterations must be at least 1"));
    }
    let primary = primary_estimator(cfg).and_then(|id| set.index_of(id));

    let mut rows = Vec::with_capacity(exp.n_iterations);
    let mut evals = Vec::with_capacity(exp.n_iterations);
    let mut snapshots: Vec<Vec<EstimatorHandle>> = Vec::with_capacity(exp.n_iterations);
    let mut pending_train: Vec<Vec<TrainingSample>> = vec![Vec::new(); set.len()];

    for iteration in 0..exp.n_iterations {
        let mut training_failed = false;
        if iteration > 0 {
            for (i, batch) in pending_train.iter_mut().enumerate() {
                let batch = std::mem::take(batch);
                if batch.is_empty() {
                    continue;
                }
                if set.entry_mut(i).handle.train_update(batch).is_err() {
                    training_failed = true;
                }
            }
        }
        snapshots.push(set.entries.iter().map(|e| e.handle.clone()).collect());

        let mut damages = Vec::with_capacity(exp.runs_per_iteration);
        let mut surviveds = Vec::with_capacity(exp.runs_per_iteration);
        let mut waitings = Vec::new();
        let mut iter_samples: Vec<Vec<TrainingSample>> = vec![Vec::new(); set.len()];
        let mut discarded = 0;
        for run in 0..exp.runs_per_iteration {
            let seed = mix_seed(base_seed, run as u64);
            let mut result = run_simulation(&cfg.world, &policy, &mut set, seed)?;
            damages.push(result.damage_rate);
            surviveds.push(result.survived_drones as f64);
            if let Some(w) = result.mean_predicted_waiting {
                waitings.push(w);
            }
            for (i, data) in result.datasets.drain(..).enumerate() {
                iter_samples[i].extend(data.samples);
                discarded += data.discards.total();
            }
        }

        let mut iter_evals = Vec::with_capacity(set.len());
        for (i, samples) in iter_samples.into_iter().enumerate() {
            let split_seed = mix_seed(
                mix_seed(base_seed, hash_seed(SPLIT_STREAM) ^ i as u64),
                iteration as u64,
            );
            let (train, test) = split_dataset(&samples, exp.test_fraction, split_seed)?;
            let (mse, mae) = if test.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let points: Vec<DataPoint> = test.iter().map(DataPoint::from).collect();
                let report = evaluate(&set.entry(i).handle, &points)?;
                (report.mse, report.mae)
            };
            iter_evals.push(EstimatorIterEval {
                id: set.entry(i).handle.spec.id.clone(),
                mse,
                mae,
                n_train: train.len(),
                n_test: test.len(),
            });
            pending_train[i] = train;
        }

        let mean_damage = mean(&damages);
        let mean_survived = mean(&surviveds);
        let utility = mean_survived / cfg.world.n_drones as f64 - mean_damage;
        rows.push(IterationRow {
            iteration,
            mean_damage,
            mean_survived,
            estimator_mse: primary
                .and_then(|i| iter_evals.get(i))
                .map_or(f64::NAN, |e| e.mse),
            discarded_samples: discarded,
            mean_predicted_waiting: if waitings.is_empty() {
                None
            } else {
                Some(mean(&waitings))
            },
            utility,
            training_failed,
        });
        evals.push(iter_evals);
    }

    let selected_iteration = match exp.selection {
        Selection::Last => exp.n_iterations - 1,
        Selection::Best => {
            let mut best = 0;
            for (i, row) in rows.iter().enumerate() {
                if row.utility >= rows[best].utility {
                    best = i;
                }
            }
            best
        }
    };
    Ok(TrainingOutcome {
        rows,
        evals,
        selected_iteration,
        selected: snapshots.swap_remove(selected_iteration),
    })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
