//! Outcome of one simulation run and its on-disk exports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::collect::EstimatorRunData;
use super::log::HistoryLog;
use crate::estimator::dataset::write_dataset_csv_with_columns;
use crate::estimator::EstimatorError;

/// One completed charger trip of a drone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub drone: usize,
    /// Tick the charging/protection rule enqueued the drone.
    pub t_enqueued: u64,
    /// Tick the release rule sent it flying.
    pub t_released: u64,
    /// Tick it reached the charger.
    pub t_arrived: u64,
    /// Tick it was granted a slot; waiting time is
    /// `t_charge_start - t_enqueued`.
    pub t_charge_start: u64,
    pub battery_enqueued: f64,
    pub battery_at_charge_start: f64,
}

impl TripRecord {
    pub fn waiting_time(&self) -> u64 {
        self.t_charge_start - self.t_enqueued
    }
}

/// One adaptation-rule evaluation, recorded when decision logging is on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub tick: u64,
    pub drone: usize,
    /// `charging`, `release` or `protection`.
    pub rule: &'static str,
    /// `ENQUEUE`, `STAY` or `FLY`.
    pub decision: &'static str,
    /// Rule threshold: safety floor (charging), fly time (release) or the
    /// computed bird-pressure threshold (protection).
    pub threshold: f64,
    /// Rule forecast: future battery (charging), ticks until a slot frees
    /// (release) or the normalized predicted bird count (protection).
    pub prediction: f64,
}

/// Everything one run produced.
#[derive(Debug, Clone)]
pub struct SimResult {
    /// `1 −` mean final crop-cell integrity.
    pub damage_rate: f64,
    pub survived_drones: usize,
    pub n_drones: usize,
    pub seed: u64,
    pub history: HistoryLog,
    /// Per-estimator datasets collected during the run.
    pub datasets: Vec<EstimatorRunData>,
    pub trips: Vec<TripRecord>,
    /// Filled only when decision logging is enabled.
    pub decisions: Vec<DecisionRecord>,
    /// Mean of all waiting-time forecasts the charging rule queried, if any.
    pub mean_predicted_waiting: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimatorMetrics {
    id: String,
    n_samples: usize,
    guard_failed: u64,
    censored: u64,
    unresolved_at_end: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Metrics {
    damage_rate: f64,
    survived_drones: usize,
    n_drones: usize,
    seed: u64,
    estimators: Vec<EstimatorMetrics>,
}

impl SimResult {
    pub fn dataset(&self, id: &str) -> Option<&EstimatorRunData> {
        self.datasets.iter().find(|d| d.id == id)
    }

    /// Write `metrics.json`: utility metrics plus the per-estimator sample
    /// and discard ledger.
    pub fn write_metrics_json(&self, path: &Path) -> std::io::Result<()> {
        let doc = Metrics {
            damage_rate: self.damage_rate,
            survived_drones: self.survived_drones,
            n_drones: self.n_drones,
            seed: self.seed,
            estimators: self
                .datasets
                .iter()
                .map(|d| EstimatorMetrics {
                    id: d.id.clone(),
                    n_samples: d.samples.len(),
                    guard_failed: d.discards.guard_failed,
                    censored: d.discards.censored,
                    unresolved_at_end: d.discards.unresolved_at_end,
                })
                .collect(),
        };
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, &doc)?;
        writeln!(out)?;
        out.flush()
    }

    pub fn write_timeseries_csv(&self, path: &Path) -> std::io::Result<()> {
        self.history.write_timeseries_csv(path)
    }

    /// Write one `dataset_<id>.csv` per estimator into `dir`.
    pub fn write_datasets(&self, dir: &Path) -> Result<(), EstimatorError> {
        for data in &self.datasets {
            let path = dir.join(format!("dataset_{}.csv", data.id));
            write_dataset_csv_with_columns(&path, &data.columns, &data.samples)?;
        }
        Ok(())
    }

    /// Write `decisions.csv` with the columns
    /// `tick,drone,rule,decision,threshold,prediction`.
    pub fn write_decisions_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "tick,drone,rule,decision,threshold,prediction")?;
        for d in &self.decisions {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                d.tick, d.drone, d.rule, d.decision, d.threshold, d.prediction
            )?;
        }
        out.flush()
    }
}
