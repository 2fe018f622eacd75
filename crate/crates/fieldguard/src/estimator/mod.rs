//! Online estimator framework: declared inputs, future outputs, delayed
//! labels and validity guards.
//!
//! An estimator predicts a future quantity (battery level Δ ticks ahead,
//! time spent waiting for a charger slot) from features observed now.  The
//! label for an observation only becomes readable Δ ticks later, so each
//! observation first enters a *pending ledger* and is resolved against the
//! simulation's snapshot log once its resolution tick has passed — and only
//! if its [`ValidityGuard`] confirms no disqualifying event occurred in
//! between.  Until the first training update a handle predicts its
//! `bootstrap_value`, which is how the very first data-collection runs are
//! driven.

pub mod dataset;
pub mod features;
pub mod guard;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, BackendKind, BackendModel, DataPoint, Regressor, ReplayBuffer};
use crate::rng::{hash_seed, mix_seed};
pub use features::{FeatureEncoding, FeatureSpec, Normalization, Observable, Snapshot};
pub use guard::ValidityGuard;

/// Identifier of a simulated entity whose snapshots appear in the log.
///
/// Drones use their index; whole-world series use [`WORLD_ENTITY`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

/// Pseudo-entity for world-level (not per-drone) observations.
pub const WORLD_ENTITY: EntityId = EntityId(u32::MAX);

/// Time-indexed access to logged entity snapshots.
///
/// `None` means the log has no snapshot for that entity/tick/field; guards
/// and label resolution treat that as an error, never as a pass.
pub trait SnapshotLog {
    fn scalar_at(&self, entity: EntityId, t: u64, field: &str) -> Option<f64>;
    fn symbol_at(&self, entity: EntityId, t: u64, field: &str) -> Option<&str>;
}

/// Adapter presenting one (entity, tick) of a [`SnapshotLog`] as an
/// [`Observable`], so feature specs can read logged state exactly like live
/// state.
pub struct LoggedSnapshot<'a> {
    pub log: &'a dyn SnapshotLog,
    pub entity: EntityId,
    pub t: u64,
}

impl Observable for LoggedSnapshot<'_> {
    fn scalar(&self, field: &str) -> Option<f64> {
        self.log.scalar_at(self.entity, self.t, field)
    }

    fn symbol(&self, field: &str) -> Option<&str> {
        self.log.symbol_at(self.entity, self.t, field)
    }
}

/// Inclusive integer prediction horizon `[min, max]`, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u64; 2]", into = "[u64; 2]")]
pub struct HorizonRange {
    pub min: u64,
    pub max: u64,
}

impl HorizonRange {
    pub fn new(min: u64, max: u64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, delta: u64) -> bool {
        (self.min..=self.max).contains(&delta)
    }

    /// Whether the estimator serves more than a single horizon, which adds
    /// the normalized `delta` input feature.
    pub fn is_multi(&self) -> bool {
        self.min < self.max
    }

    /// Clamp an arbitrary tick count into the horizon.
    pub fn clamp(&self, delta: u64) -> u64 {
        delta.clamp(self.min, self.max)
    }
}

impl From<[u64; 2]> for HorizonRange {
    fn from(v: [u64; 2]) -> Self {
        Self { min: v[0], max: v[1] }
    }
}

impl From<HorizonRange> for [u64; 2] {
    fn from(h: HorizonRange) -> Self {
        [h.min, h.max]
    }
}

/// Full declaration of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub id: String,
    pub inputs: Vec<FeatureSpec>,
    /// Scalar feature whose future value is the training label.
    pub output: FeatureSpec,
    pub horizon: HorizonRange,
    pub guard: ValidityGuard,
    pub backend: BackendKind,
    /// Prediction served before the first successful training update.
    pub bootstrap_value: f64,
}

impl EstimatorSpec {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.horizon.min == 0 || self.horizon.min > self.horizon.max {
            return Err(EstimatorError::InvalidHorizon {
                min: self.horizon.min,
                max: self.horizon.max,
            });
        }
        if !self.bootstrap_value.is_finite() {
            return Err(EstimatorError::NonFiniteBootstrap(self.bootstrap_value));
        }
        if self.inputs.is_empty() {
            return Err(EstimatorError::NoInputs(self.id.clone()));
        }
        for (i, f) in self.inputs.iter().enumerate() {
            f.validate()?;
            if self.inputs[..i].iter().any(|g| g.name == f.name) {
                return Err(EstimatorError::DuplicateInputFeature(f.name.clone()));
            }
        }
        self.output.validate()?;
        if matches!(self.output.encoding, FeatureEncoding::OneHot { .. }) {
            return Err(EstimatorError::NonScalarOutput(self.output.name.clone()));
        }
        Ok(())
    }

    /// Input-vector width contributed by the declared features (excluding
    /// the implicit delta feature of multi-horizon estimators).
    pub fn input_dims(&self) -> usize {
        self.inputs.iter().map(FeatureSpec::dims).sum()
    }

    /// Input-vector width the backend model actually sees.
    pub fn model_input_dims(&self) -> usize {
        self.input_dims() + usize::from(self.horizon.is_multi())
    }

    /// Dataset CSV column names for the full input vector.
    pub fn input_column_names(&self) -> Vec<String> {
        let mut cols: Vec<String> = self
            .inputs
            .iter()
            .flat_map(|f| f.column_names())
            .collect();
        if self.horizon.is_multi() {
            cols.push("delta_over_max".to_string());
        }
        cols
    }
}

/// Observation whose label lies in the future.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingSample {
    pub input: Vec<f64>,
    pub delta: u64,
    pub t_observed: u64,
    pub entity: EntityId,
}

/// Fully labeled supervised sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub input: Vec<f64>,
    pub label: f64,
    pub t_observed: u64,
    pub t_resolved: u64,
}

impl From<&TrainingSample> for DataPoint {
    fn from(s: &TrainingSample) -> Self {
        DataPoint::new(s.input.clone(), s.label)
    }
}

/// Why pending samples never became training samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardStats {
    /// Guard rejected the observation→label interval.
    pub guard_failed: u64,
    /// The awaited event can no longer happen (e.g. the drone terminated
    /// while queued, so its waiting time has no defined label).
    pub censored: u64,
    /// Still pending when the run ended.
    pub unresolved_at_end: u64,
}

impl DiscardStats {
    pub fn total(&self) -> u64 {
        self.guard_failed + self.censored + self.unresolved_at_end
    }

    pub fn add(&mut self, other: &DiscardStats) {
        self.guard_failed += other.guard_failed;
        self.censored += other.censored;
        self.unresolved_at_end += other.unresolved_at_end;
    }
}

/// Outcome of one training update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Samples newly added by this update.
    pub n_samples: usize,
    /// Samples in the replay window the backend was fit on.
    pub window_samples: usize,
    /// MSE of the updated model over the replay window.
    pub final_loss: f64,
}

/// Errors from estimator declaration, observation and training.
#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("horizon [{min}, {max}] is invalid; need 1 <= min <= max")]
    InvalidHorizon { min: u64, max: u64 },
    #[error("estimator {0} declares no input features")]
    NoInputs(String),
    #[error("duplicate input feature name {0}")]
    DuplicateInputFeature(String),
    #[error("bootstrap value must be finite, got {0}")]
    NonFiniteBootstrap(f64),
    #[error("output feature {0} must be scalar-encoded")]
    NonScalarOutput(String),
    #[error("feature {name} declares an invalid min-max range [{min}, {max}]")]
    InvalidFeatureRange { name: String, min: f64, max: f64 },
    #[error("one-hot feature {0} has an empty alphabet")]
    EmptyAlphabet(String),
    #[error("one-hot feature {name} repeats symbol {symbol}")]
    DuplicateAlphabetSymbol { name: String, symbol: String },
    #[error("snapshot has no scalar field {0}")]
    MissingScalarField(String),
    #[error("snapshot has no symbolic field {0}")]
    MissingSymbolField(String),
    #[error("symbolic field {field} holds {value}, which is not in the alphabet")]
    UnknownSymbol { field: String, value: String },
    #[error("delta {delta} outside horizon [{min}, {max}]")]
    DeltaOutOfHorizon { delta: u64, min: u64, max: u64 },
    #[error("history log has no snapshot for entity {} at tick {t}", entity.0)]
    MissingHistory { entity: EntityId, t: u64 },
    #[error("label at tick {t} is not finite")]
    NonFiniteLabel { t: u64 },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("dataset file error: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset column mismatch: expected {expected} input columns, file has {got}")]
    DatasetColumns { expected: usize, got: usize },
}

/// A declared estimator with its model, pending ledger and replay buffer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorHandle {
    pub spec: EstimatorSpec,
    pub model: BackendModel,
    pending: Vec<PendingSample>,
    pub buffer: ReplayBuffer<TrainingSample>,
    trained: bool,
    pub discards: DiscardStats,
    /// Completed training updates; salts the per-update training seed.
    updates: u64,
}

impl EstimatorHandle {
    /// Build a handle with the default replay window of 4 iterations.
    pub fn new(spec: EstimatorSpec) -> Result<Self, EstimatorError> {
        Self::with_window(spec, 4)
    }

    /// Build a handle keeping the last `window` training batches.
    pub fn with_window(mut spec: EstimatorSpec, window: usize) -> Result<Self, EstimatorError> {
        spec.validate()?;
        // A constant backend predicts its value from the start; aligning the
        // bootstrap with it keeps "untrained predictions equal bootstrap"
        // true without special-casing predict.
        if let BackendKind::Constant { value } = spec.backend {
            spec.bootstrap_value = value;
        }
        let model = spec.backend.build(spec.model_input_dims())?;
        Ok(Self {
            spec,
            model,
            pending: Vec::new(),
            buffer: ReplayBuffer::new(window),
            trained: false,
            discards: DiscardStats::default(),
            updates: 0,
        })
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn pending(&self) -> &[PendingSample] {
        &self.pending
    }

    /// Encode the declared input features (plus the delta feature for
    /// multi-horizon estimators) from a live snapshot.
    pub fn encode_input(
        &self,
        snap: &dyn Observable,
        delta: u64,
    ) -> Result<Vec<f64>, EstimatorError> {
        let mut out = Vec::with_capacity(self.spec.model_input_dims());
        for f in &self.spec.inputs {
            f.encode(snap, &mut out)?;
        }
        if self.spec.horizon.is_multi() {
            out.push(delta as f64 / self.spec.horizon.max as f64);
        }
        Ok(out)
    }

    /// Record an observation whose label will be readable `delta` ticks
    /// after `t`.
    pub fn observe(
        &mut self,
        snap: &dyn Observable,
        entity: EntityId,
        t: u64,
        delta: u64,
    ) -> Result<&PendingSample, EstimatorError> {
        self.check_delta(delta)?;
        let input = self.encode_input(snap, delta)?;
        self.pending.push(PendingSample {
            input,
            delta,
            t_observed: t,
            entity,
        });
        Ok(self.pending.last().expect("just pushed"))
    }

    /// Record an externally assembled, already-labeled sample (used by
    /// event-based collectors whose label is the time until an event, not a
    /// logged field).
    pub fn encode_event_input(
        &self,
        snap: &dyn Observable,
    ) -> Result<Vec<f64>, EstimatorError> {
        self.encode_input(snap, self.spec.horizon.min)
    }

    fn check_delta(&self, delta: u64) -> Result<(), EstimatorError> {
        if !self.spec.horizon.contains(delta) {
            return Err(EstimatorError::DeltaOutOfHorizon {
                delta,
                min: self.spec.horizon.min,
                max: self.spec.horizon.max,
            });
        }
        Ok(())
    }

    /// Resolve every pending sample whose resolution tick has passed.
    ///
    /// Matured samples are removed from the ledger; each becomes a
    /// [`TrainingSample`] labeled from the log at `t_observed + delta` iff
    /// the guard holds over `(t_observed, t_observed + delta]`, and is
    /// otherwise counted in [`DiscardStats::guard_failed`].
    pub fn resolve_pending(
        &mut self,
        log: &dyn SnapshotLog,
        t_now: u64,
    ) -> Result<Vec<TrainingSample>, EstimatorError> {
        let mut resolved = Vec::new();
        let mut still_pending = Vec::with_capacity(self.pending.len());
        for p in self.pending.drain(..) {
            let t_resolved = p.t_observed + p.delta;
            if t_resolved > t_now {
                still_pending.push(p);
                continue;
            }
            if !self.spec.guard.holds(log, p.entity, p.t_observed, t_resolved)? {
                self.discards.guard_failed += 1;
                continue;
            }
            let at_resolution = LoggedSnapshot {
                log,
                entity: p.entity,
                t: t_resolved,
            };
            let label = self.spec.output.read_label(&at_resolution)?;
            if !label.is_finite() {
                return Err(EstimatorError::NonFiniteLabel { t: t_resolved });
            }
            resolved.push(TrainingSample {
                input: p.input,
                label,
                t_observed: p.t_observed,
                t_resolved,
            });
        }
        self.pending = still_pending;
        Ok(resolved)
    }

    /// Drop all still-pending samples (end of a run), counting them as
    /// unresolved.
    pub fn drain_unresolved(&mut self) {
        self.discards.unresolved_at_end += self.pending.len() as u64;
        self.pending.clear();
    }

    /// Count `n` pending-event observations whose awaited event can no
    /// longer occur.
    pub fn note_censored(&mut self, n: u64) {
        self.discards.censored += n;
    }

    /// Predict the output `delta` ticks ahead of the state in `snap`.
    ///
    /// Before the first successful [`EstimatorHandle::train_update`] this is
    /// the constant `bootstrap_value` (the inputs are still encoded, so
    /// malformed snapshots fail identically in both phases).
    pub fn predict(&self, snap: &dyn Observable, delta: u64) -> Result<f64, EstimatorError> {
        self.check_delta(delta)?;
        let input = self.encode_input(snap, delta)?;
        self.predict_encoded(&input)
    }

    /// Predict from an already-encoded input vector.
    pub fn predict_encoded(&self, input: &[f64]) -> Result<f64, EstimatorError> {
        if !self.trained {
            return Ok(self.spec.bootstrap_value);
        }
        let y = self.model.predict(input)?;
        if !y.is_finite() {
            return Err(EstimatorError::Backend(BackendError::NonFinitePrediction));
        }
        Ok(y)
    }

    /// Append `new_data` to the replay buffer as one iteration and refit the
    /// backend on the union of the retained window.
    ///
    /// On backend failure (e.g. diverged SGD) the previous model, buffer
    /// state excepted, is kept and the error returned, so callers can carry
    /// the old model into the next iteration.
    pub fn train_update(
        &mut self,
        new_data: Vec<TrainingSample>,
    ) -> Result<TrainingReport, EstimatorError> {
        let learnable = !matches!(self.spec.backend, BackendKind::Constant { .. });
        if learnable && new_data.is_empty() {
            return Err(EstimatorError::Backend(BackendError::EmptyData));
        }
        let n_samples = new_data.len();
        self.buffer.push_batch(new_data);
        let window: Vec<DataPoint> = self
            .buffer
            .training_set()
            .iter()
            .map(DataPoint::from)
            .collect();
        let seed = mix_seed(hash_seed(&self.spec.id), self.updates);
        let report = self.model.fit(&window, seed)?;
        self.trained = true;
        self.updates += 1;
        Ok(TrainingReport {
            n_samples,
            window_samples: report.n_samples,
            final_loss: report.loss,
        })
    }
}

impl Regressor for EstimatorHandle {
    fn predict(&self, x: &[f64]) -> Result<f64, BackendError> {
        match self.predict_encoded(x) {
            Ok(v) => Ok(v),
            Err(EstimatorError::Backend(e)) => Err(e),
            // Encoding errors cannot arise from a raw vector; anything else
            // is a prediction failure.
            Err(_) => Err(BackendError::NonFinitePrediction),
        }
    }
}

#[cfg(test)]
pub mod testutil {
    use super::*;
    use std::collections::HashMap;

    /// In-memory snapshot log for unit tests: one scalar (`battery`) and one
    /// symbol (`mode`) per (entity, tick).
    #[derive(Default)]
    pub struct TestLog {
        entries: HashMap<(EntityId, u64), (f64, String)>,
    }

    impl TestLog {
        pub fn put(&mut self, entity: EntityId, t: u64, battery: f64, mode: &str) {
            self.entries.insert((entity, t), (battery, mode.to_string()));
        }
    }

    impl SnapshotLog for TestLog {
        fn scalar_at(&self, entity: EntityId, t: u64, field: &str) -> Option<f64> {
            if field != "battery" {
                return None;
            }
            self.entries.get(&(entity, t)).map(|(b, _)| *b)
        }

        fn symbol_at(&self, entity: EntityId, t: u64, field: &str) -> Option<&str> {
            if field != "mode" {
                return None;
            }
            self.entries.get(&(entity, t)).map(|(_, m)| m.as_str())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::TestLog;
    use super::*;
    use crate::backends::MlpHyper;

    pub const MODES: [&str; 5] = [
        "IDLE",
        "PROTECTING",
        "MOVING_TO_CHARGER",
        "CHARGING",
        "TERMINATED",
    ];

    fn battery_spec(backend: BackendKind, bootstrap: f64) -> EstimatorSpec {
        EstimatorSpec {
            id: "future_battery".to_string(),
            inputs: vec![
                FeatureSpec::scalar("battery", "battery"),
                FeatureSpec::one_hot("mode", "mode", MODES),
            ],
            output: FeatureSpec::scalar("battery", "battery"),
            horizon: HorizonRange::new(1, 200),
            guard: ValidityGuard::mode_never("CHARGING"),
            backend,
            bootstrap_value: bootstrap,
        }
    }

    fn snap(battery: f64, mode: &'static str) -> Snapshot {
        Snapshot::new()
            .with_scalar("battery", battery)
            .with_symbol("mode", mode)
    }

    #[test]
    fn untrained_handle_predicts_bootstrap_everywhere() {
        let h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        assert!(!h.is_trained());
        assert_eq!(h.predict(&snap(0.8, "IDLE"), 50).unwrap(), 0.0);
        assert_eq!(h.predict(&snap(0.1, "TERMINATED"), 200).unwrap(), 0.0);
    }

    #[test]
    fn zero_min_horizon_is_rejected() {
        let mut spec = battery_spec(BackendKind::Knn { k: 5 }, 0.0);
        spec.horizon = HorizonRange::new(0, 200);
        assert!(matches!(
            EstimatorHandle::new(spec),
            Err(EstimatorError::InvalidHorizon { .. })
        ));
    }

    #[test]
    fn inverted_horizon_and_duplicate_features_are_rejected() {
        let mut spec = battery_spec(BackendKind::Knn { k: 5 }, 0.0);
        spec.horizon = HorizonRange::new(10, 5);
        assert!(EstimatorHandle::new(spec).is_err());

        let mut spec = battery_spec(BackendKind::Knn { k: 5 }, 0.0);
        spec.inputs.push(FeatureSpec::scalar("battery", "battery"));
        assert!(matches!(
            EstimatorHandle::new(spec),
            Err(EstimatorError::DuplicateInputFeature(_))
        ));
    }

    #[test]
    fn battery_and_mode_inputs_span_six_declared_dimensions() {
        let spec = battery_spec(BackendKind::Knn { k: 5 }, 0.0);
        assert_eq!(spec.input_dims(), 1 + MODES.len());
        // Multi-horizon adds the delta feature the model actually sees.
        assert_eq!(spec.model_input_dims(), 7);
        let h = EstimatorHandle::new(spec).unwrap();
        assert_eq!(h.model.input_dim(), Some(7));
    }

    #[test]
    fn observe_appends_pending_with_given_coordinates() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        let p = h.observe(&snap(0.8, "IDLE"), EntityId(3), 100, 50).unwrap();
        assert_eq!(p.t_observed, 100);
        assert_eq!(p.delta, 50);
        assert_eq!(p.entity, EntityId(3));
        // battery, one-hot IDLE, delta/Δmax = 50/200.
        assert_eq!(p.input, vec![0.8, 1.0, 0.0, 0.0, 0.0, 0.0, 0.25]);
        assert_eq!(h.pending_len(), 1);
    }

    #[test]
    fn observe_outside_horizon_is_rejected() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        assert!(matches!(
            h.observe(&snap(0.8, "IDLE"), EntityId(0), 0, 300),
            Err(EstimatorError::DeltaOutOfHorizon { delta: 300, .. })
        ));
        assert_eq!(h.pending_len(), 0);
    }

    #[test]
    fn same_tick_observes_with_different_deltas_are_distinct() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        h.observe(&snap(0.8, "IDLE"), EntityId(0), 100, 10).unwrap();
        h.observe(&snap(0.8, "IDLE"), EntityId(0), 100, 20).unwrap();
        assert_eq!(h.pending_len(), 2);
        let deltas: Vec<u64> = h.pending().iter().map(|p| p.delta).collect();
        assert_eq!(deltas, vec![10, 20]);
    }

    fn log_with_modes(entity: EntityId, range: std::ops::RangeInclusive<u64>, f: impl Fn(u64) -> (f64, &'static str)) -> TestLog {
        let mut log = TestLog::default();
        for t in range {
            let (b, m) = f(t);
            log.put(entity, t, b, m);
        }
        log
    }

    #[test]
    fn guarded_resolution_discards_interval_containing_charging() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        h.observe(&snap(0.8, "IDLE"), EntityId(0), 100, 50).unwrap();
        let log = log_with_modes(EntityId(0), 100..=150, |t| {
            (0.5, if t == 120 { "CHARGING" } else { "IDLE" })
        });
        let out = h.resolve_pending(&log, 200).unwrap();
        assert!(out.is_empty());
        assert_eq!(h.discards.guard_failed, 1);
        assert_eq!(h.pending_len(), 0, "matured sample leaves the ledger either way");
    }

    #[test]
    fn passing_guard_yields_sample_labeled_from_log() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        h.observe(&snap(0.8, "IDLE"), EntityId(0), 100, 50).unwrap();
        let log = log_with_modes(EntityId(0), 100..=150, |t| {
            (if t == 150 { 0.55 } else { 0.7 }, "PROTECTING")
        });
        let out = h.resolve_pending(&log, 150).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].label, 0.55, "label read at exactly t_observed + delta");
        assert_eq!(out[0].t_observed, 100);
        assert_eq!(out[0].t_resolved, 150);
        assert_eq!(h.discards.guard_failed, 0);
    }

    #[test]
    fn immature_pending_stays_in_ledger() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        h.observe(&snap(0.8, "IDLE"), EntityId(0), 100, 50).unwrap();
        let log = log_with_modes(EntityId(0), 100..=140, |_| (0.7, "IDLE"));
        let out = h.resolve_pending(&log, 140).unwrap();
        assert!(out.is_empty());
        assert_eq!(h.pending_len(), 1);
    }

    #[test]
    fn ledger_conservation_across_mixed_resolution() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        // Three pendings: one resolves, one guard-fails, one stays.
        h.observe(&snap(0.9, "IDLE"), EntityId(0), 10, 20).unwrap(); // resolves at 30
        h.observe(&snap(0.9, "IDLE"), EntityId(1), 10, 20).unwrap(); // charging at 25
        h.observe(&snap(0.9, "IDLE"), EntityId(0), 10, 100).unwrap(); // matures at 110
        let before = h.pending_len();
        let mut log = TestLog::default();
        for t in 10..=40 {
            log.put(EntityId(0), t, 0.8, "IDLE");
            log.put(EntityId(1), t, 0.8, if t == 25 { "CHARGING" } else { "IDLE" });
        }
        let out = h.resolve_pending(&log, 40).unwrap();
        assert_eq!(
            out.len() + h.discards.guard_failed as usize + h.pending_len(),
            before,
            "resolved + discarded + still-pending must equal prior pending count"
        );
        assert_eq!((out.len(), h.discards.guard_failed, h.pending_len()), (1, 1, 1));
    }

    #[test]
    fn missing_history_fails_resolution() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        h.observe(&snap(0.8, "IDLE"), EntityId(0), 100, 5).unwrap();
        let log = TestLog::default();
        assert!(matches!(
            h.resolve_pending(&log, 200),
            Err(EstimatorError::MissingHistory { .. })
        ));
    }

    #[test]
    fn constant_backend_predicts_its_value_without_training() {
        let h = EstimatorHandle::new(battery_spec(
            BackendKind::Constant { value: 100.0 },
            0.0, // bootstrap is normalized to the constant
        ))
        .unwrap();
        assert_eq!(h.predict(&snap(0.5, "IDLE"), 50).unwrap(), 100.0);
        assert_eq!(h.spec.bootstrap_value, 100.0);
    }

    #[test]
    fn constant_train_update_leaves_model_unchanged_but_marks_trained() {
        let mut h =
            EstimatorHandle::new(battery_spec(BackendKind::Constant { value: 35.0 }, 0.0)).unwrap();
        let report = h.train_update(Vec::new()).unwrap();
        assert_eq!(report.n_samples, 0);
        assert!(h.is_trained());
        assert_eq!(h.predict(&snap(0.5, "IDLE"), 50).unwrap(), 35.0);
    }

    fn toy_sample(x: Vec<f64>, label: f64) -> TrainingSample {
        TrainingSample {
            input: x,
            label,
            t_observed: 0,
            t_resolved: 1,
        }
    }

    fn single_horizon_knn_spec(k: usize) -> EstimatorSpec {
        EstimatorSpec {
            id: "toy".to_string(),
            inputs: vec![FeatureSpec::scalar("x", "battery")],
            output: FeatureSpec::scalar("x", "battery"),
            horizon: HorizonRange::new(1, 1),
            guard: ValidityGuard::AlwaysValid,
            backend: BackendKind::Knn { k },
            bootstrap_value: 0.0,
        }
    }

    #[test]
    fn knn_fitted_on_one_sample_returns_it_for_the_same_query() {
        let mut h = EstimatorHandle::new(single_horizon_knn_spec(5)).unwrap();
        h.train_update(vec![toy_sample(vec![0.8], 0.42)]).unwrap();
        let p = h.predict(&Snapshot::new().with_scalar("battery", 0.8), 1).unwrap();
        assert_eq!(p, 0.42);
    }

    #[test]
    fn replay_window_controls_knn_store_size() {
        let batch = |offset: usize| -> Vec<TrainingSample> {
            (0..10)
                .map(|i| toy_sample(vec![(offset * 10 + i) as f64], i as f64))
                .collect()
        };

        let mut w1 = EstimatorHandle::with_window(single_horizon_knn_spec(1), 1).unwrap();
        w1.train_update(batch(0)).unwrap();
        let store = |h: &EstimatorHandle| match &h.model {
            BackendModel::Knn(m) => m.len(),
            _ => unreachable!(),
        };
        assert_eq!(store(&w1), 10, "W=1 stores exactly the newest 10 samples");
        w1.train_update(batch(1)).unwrap();
        assert_eq!(store(&w1), 10);

        let mut w2 = EstimatorHandle::with_window(single_horizon_knn_spec(1), 2).unwrap();
        w2.train_update(batch(0)).unwrap();
        w2.train_update(batch(1)).unwrap();
        assert_eq!(store(&w2), 20, "W=2 keeps both iterations");
        assert_eq!(w2.buffer.n_batches(), 2);
    }

    #[test]
    fn empty_update_for_learnable_backend_is_an_error() {
        let mut h = EstimatorHandle::new(single_horizon_knn_spec(1)).unwrap();
        assert!(h.train_update(Vec::new()).is_err());
        assert!(!h.is_trained(), "failed first update keeps bootstrap behavior");
    }

    #[test]
    fn failed_mlp_update_keeps_previous_model() {
        let spec = EstimatorSpec {
            id: "diverging".to_string(),
            inputs: vec![FeatureSpec::scalar("x", "battery")],
            output: FeatureSpec::scalar("x", "battery"),
            horizon: HorizonRange::new(1, 1),
            guard: ValidityGuard::AlwaysValid,
            backend: BackendKind::Mlp {
                hyper: MlpHyper {
                    hidden_layers: vec![],
                    learning_rate: 1.0e200,
                    epochs: 2,
                    batch_size: 1,
                    ..MlpHyper::default()
                },
            },
            bootstrap_value: 0.5,
        };
        let mut h = EstimatorHandle::new(spec).unwrap();
        let err = h.train_update(vec![toy_sample(vec![1.0], 1.0e200)]);
        assert!(err.is_err());
        assert!(!h.is_trained());
        // Bootstrap still in force.
        assert_eq!(
            h.predict(&Snapshot::new().with_scalar("battery", 1.0), 1).unwrap(),
            0.5
        );
    }

    #[test]
    fn training_then_prediction_is_deterministic() {
        let data: Vec<TrainingSample> = (0..40)
            .map(|i| toy_sample(vec![i as f64 / 40.0], (i % 7) as f64))
            .collect();
        let spec = EstimatorSpec {
            id: "det".to_string(),
            inputs: vec![FeatureSpec::scalar("x", "battery")],
            output: FeatureSpec::scalar("x", "battery"),
            horizon: HorizonRange::new(1, 1),
            guard: ValidityGuard::AlwaysValid,
            backend: BackendKind::Mlp {
                hyper: MlpHyper {
                    hidden_layers: vec![8],
                    epochs: 5,
                    ..MlpHyper::default()
                },
            },
            bootstrap_value: 0.0,
        };
        let mut a = EstimatorHandle::new(spec.clone()).unwrap();
        let mut b = EstimatorHandle::new(spec).unwrap();
        a.train_update(data.clone()).unwrap();
        b.train_update(data).unwrap();
        for x in [0.0, 0.3, 0.9] {
            let snap = Snapshot::new().with_scalar("battery", x);
            assert_eq!(a.predict(&snap, 1).unwrap(), b.predict(&snap, 1).unwrap());
        }
    }

    #[test]
    fn drain_unresolved_counts_and_clears() {
        let mut h = EstimatorHandle::new(battery_spec(BackendKind::Knn { k: 5 }, 0.0)).unwrap();
        h.observe(&snap(0.8, "IDLE"), EntityId(0), 100, 50).unwrap();
        h.observe(&snap(0.7, "IDLE"), EntityId(1), 110, 50).unwrap();
        h.drain_unresolved();
        assert_eq!(h.pending_len(), 0);
        assert_eq!(h.discards.unresolved_at_end, 2);
        assert_eq!(h.discards.total(), 2);
    }
}
