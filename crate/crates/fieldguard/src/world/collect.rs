//! Registry wiring estimators into the simulation loop: periodic and
//! event-driven sample collection, resolution against the history log, and
//! per-run dataset extraction.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::estimator::{
    DiscardStats, EntityId, EstimatorError, EstimatorHandle, Snapshot, SnapshotLog,
    TrainingSample, WORLD_ENTITY,
};

/// How the simulation feeds observations to one estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectorKind {
    /// Observe every live drone each observation tick, with a horizon drawn
    /// uniformly from the estimator's range; resolve by log replay.
    DronePeriodic,
    /// Observe the aggregate world entity each observation tick.
    WorldPeriodic,
    /// Observe a drone whenever the charging rule enqueues it, using the
    /// horizon the rule queried; resolve by log replay.
    ChargingDecision,
    /// Event ledger from enqueueing to the start of charging; the label is
    /// the realized waiting time in ticks.
    EnqueueWait,
}

/// One registered estimator plus its per-run collection state.
#[derive(Debug, Clone)]
pub struct EstimatorEntry {
    pub handle: EstimatorHandle,
    pub kind: CollectorKind,
    /// Samples resolved during the current run.
    pub samples: Vec<TrainingSample>,
    /// Open enqueue events: drone id → (enqueue tick, encoded input).
    open_waits: BTreeMap<usize, (u64, Vec<f64>)>,
}

/// Everything an estimator produced over one run.
#[derive(Debug, Clone)]
pub struct EstimatorRunData {
    pub id: String,
    pub columns: Vec<String>,
    pub samples: Vec<TrainingSample>,
    pub discards: DiscardStats,
}

/// Ordered collection of estimators attached to a run.
#[derive(Debug, Clone, Default)]
pub struct EstimatorSet {
    pub entries: Vec<EstimatorEntry>,
}

impl EstimatorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Register an estimator; returns its index, used by policies to refer
    /// to it.
    pub fn register(&mut self, handle: EstimatorHandle, kind: CollectorKind) -> usize {
        self.entries.push(EstimatorEntry {
            handle,
            kind,
            samples: Vec::new(),
            open_waits: BTreeMap::new(),
        });
        self.entries.len() - 1
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.handle.spec.id == id)
    }

    pub fn entry(&self, index: usize) -> &EstimatorEntry {
        &self.entries[index]
    }

    pub fn entry_mut(&mut self, index: usize) -> &mut EstimatorEntry {
        &mut self.entries[index]
    }

    /// Periodic observations for tick `t`.  `drone_snaps` holds one snapshot
    /// per live drone, in id order; horizon draws come from `rng` in entry
    /// order, then target order.
    pub fn observe_periodic(
        &mut self,
        drone_snaps: &[(EntityId, Snapshot)],
        world_snap: &Snapshot,
        t: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), EstimatorError> {
        for entry in &mut self.entries {
            let h = entry.handle.spec.horizon;
            match entry.kind {
                CollectorKind::DronePeriodic => {
                    for (entity, snap) in drone_snaps {
                        let delta = rng.gen_range(h.min..=h.max);
                        entry.handle.observe(snap, *entity, t, delta)?;
                    }
                }
                CollectorKind::WorldPeriodic => {
                    let delta = rng.gen_range(h.min..=h.max);
                    entry.handle.observe(world_snap, WORLD_ENTITY, t, delta)?;
                }
                CollectorKind::ChargingDecision | CollectorKind::EnqueueWait => {}
            }
        }
        Ok(())
    }

    /// The charging rule enqueued `drone` after querying horizon `delta`.
    pub fn note_charging_decision(
        &mut self,
        drone: usize,
        snap: &Snapshot,
        t: u64,
        delta: u64,
    ) -> Result<(), EstimatorError> {
        for entry in &mut self.entries {
            if entry.kind == CollectorKind::ChargingDecision {
                let delta = entry.handle.spec.horizon.clamp(delta);
                entry.handle.observe(snap, EntityId(drone as u32), t, delta)?;
            }
        }
        Ok(())
    }

    /// `drone` was enqueued at tick `t`; opens a waiting-time event.
    pub fn note_enqueue(
        &mut self,
        drone: usize,
        snap: &Snapshot,
        t: u64,
    ) -> Result<(), EstimatorError> {
        for entry in &mut self.entries {
            if entry.kind == CollectorKind::EnqueueWait {
                let input = entry.handle.encode_event_input(snap)?;
                entry.open_waits.insert(drone, (t, input));
            }
        }
        Ok(())
    }

    /// `drone` started charging at tick `t`; closes its waiting-time event.
    pub fn note_charge_start(&mut self, drone: usize, t: u64) {
        for entry in &mut self.entries {
            if let Some((t_enqueued, input)) = entry.open_waits.remove(&drone) {
                entry.samples.push(TrainingSample {
                    input,
                    label: (t - t_enqueued) as f64,
                    t_observed: t_enqueued,
                    t_resolved: t,
                });
            }
        }
    }

    /// `drone` terminated; open events about it become censored samples.
    pub fn note_death(&mut self, drone: usize) {
        for entry in &mut self.entries {
            if entry.open_waits.remove(&drone).is_some() {
                entry.handle.note_censored(1);
            }
        }
    }

    /// Resolve matured pending observations against the log.
    pub fn resolve(
        &mut self,
        log: &dyn SnapshotLog,
        t_now: u64,
    ) -> Result<(), EstimatorError> {
        for entry in &mut self.entries {
            let resolved = entry.handle.resolve_pending(log, t_now)?;
            entry.samples.extend(resolved);
        }
        Ok(())
    }

    /// End of run: everything still open or pending is unresolved.
    pub fn finish(&mut self) {
        for entry in &mut self.entries {
            let open = entry.open_waits.len();
            entry.open_waits.clear();
            entry.handle.discards.unresolved_at_end += open as u64;
            entry.handle.drain_unresolved();
        }
    }

    /// Extract (and reset) the datasets and discard ledgers of the run just
    /// finished; models and replay buffers are kept.
    pub fn take_run_data(&mut self) -> Vec<EstimatorRunData> {
        self.entries
            .iter_mut()
            .map(|entry| EstimatorRunData {
                id: entry.handle.spec.id.clone(),
                columns: entry.handle.spec.input_column_names(),
                samples: std::mem::take(&mut entry.samples),
                discards: std::mem::take(&mut entry.handle.discards),
            })
            .collect()
    }
}
