//! Experiment configuration: a TOML file (or built-in preset) with flat,
//! typed sections for the world, the experiment loop, both adaptation-rule
//! scenarios, sweep grids and estimator declarations.  Any key can be
//! overridden from the command line with dotted `--set` paths, and the fully
//! resolved configuration is echoed next to every output for reproducibility.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendKind, MlpHyper, OutputActivation};
use crate::estimator::{EstimatorHandle, EstimatorSpec, FeatureSpec, HorizonRange, ValidityGuard};
use crate::rng::hash_seed;
use crate::rules::{
    BatterySource, BirdsSource, ChargingPolicy, ChargingRuleParams, Policy, ProtectionPolicy,
    ProtectionRuleParams, WaitingSource,
};
use crate::world::{CollectorKind, DroneMode, EstimatorSet, World, WorldConfig};

use super::HarnessError;

/// Which adaptation rule drives the drones during experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Drones decide when to leave for the charger (waiting-time forecasts).
    Charging,
    /// Drones weigh battery reserves against current and predicted birds.
    Protection,
}

/// Which trained estimator version a training session returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The version that ran the final iteration.
    Last,
    /// The version from the iteration with the highest composite utility
    /// (survived fraction minus damage rate); ties go to the later iteration.
    Best,
}

/// The iterative simulate-train loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub scenario: Scenario,
    /// Simulate-train rounds; the first one always runs on bootstrap models.
    pub n_iterations: usize,
    /// Simulations per iteration; run r uses a seed derived from (seed, r).
    pub runs_per_iteration: usize,
    /// Seeds that sweeps and aggregates span.
    pub seeds: Vec<u64>,
    pub selection: Selection,
    /// Training batches kept: models refit on the last `replay_window`
    /// iterations of data.
    pub replay_window: usize,
    /// Held-out share of each iteration's samples used for the report MSE.
    pub test_fraction: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            scenario: Scenario::Charging,
            n_iterations: 6,
            runs_per_iteration: 3,
            seeds: vec![1, 2, 3, 4, 5],
            selection: Selection::Best,
            replay_window: 4,
            test_fraction: 0.25,
        }
    }
}

/// Battery forecast bound used when the charging rule has no estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryBound {
    /// Assume the drone flies the whole horizon (conservative).
    Lower,
    /// Assume the drone hovers the whole horizon (optimistic).
    Upper,
}

/// Charging-scenario rule parameters and forecast sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChargingSection {
    /// A drone enqueues when its forecast battery falls below this.
    pub safety_threshold: f64,
    /// Forecast horizon cap for non-estimator battery sources.
    pub max_horizon: u64,
    /// Fixed waiting-time forecast, used unless an estimator is named.
    pub waiting_constant: f64,
    /// Id of a declared waiting-time estimator.
    pub waiting_estimator: Option<String>,
    /// Physics bound for battery forecasts (unless overridden below).
    pub battery_bound: BatteryBound,
    /// Fixed battery forecast; takes precedence over the bound.
    pub battery_constant: Option<f64>,
    /// Id of a declared future-battery estimator; takes precedence over both.
    pub battery_estimator: Option<String>,
}

impl Default for ChargingSection {
    fn default() -> Self {
        Self {
            safety_threshold: 0.2,
            max_horizon: 200,
            waiting_constant: 0.0,
            waiting_estimator: None,
            battery_bound: BatteryBound::Lower,
            battery_constant: None,
            battery_estimator: None,
        }
    }
}

/// Protection-scenario threshold coefficients and bird forecast source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtectionSection {
    /// Threshold intercept.
    pub b: f64,
    /// Weight of the currently detected bird fraction.
    pub c: f64,
    /// Weight of the predicted bird fraction.
    pub f: f64,
    /// Fixed bird-count prediction, used unless an estimator is named.
    pub birds_constant: f64,
    /// Id of a declared future-birds estimator.
    pub birds_estimator: Option<String>,
}

impl Default for ProtectionSection {
    fn default() -> Self {
        Self { b: 0.1, c: 0.2, f: 0.2, birds_constant: 0.0, birds_estimator: None }
    }
}

/// Grid-search value lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Waiting-time constants for the charging baseline sweep.
    pub constant_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub c_values: Vec<f64>,
    pub f_values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            constant_values: frange(0.0, 100.0, 5.0),
            b_values: frange(0.0, 0.4, 0.05),
            c_values: frange(0.0, 0.6, 0.1),
            f_values: frange(0.0, 0.6, 0.1),
        }
    }
}

/// Inclusive `start..=stop` in steps of `step`, with each point rounded to
/// ten decimals so grids of decimal steps come out clean (0.3, not
/// 0.30000000000000004).
fn frange(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect()
}

/// What a declared estimator predicts.  The role fixes its input features,
/// label, horizon and default collection mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorRole {
    /// Ticks between enqueueing and charging start, labelled from completed
    /// charger trips.
    WaitingTime,
    /// Battery level a horizon away, labelled from the state log.
    FutureBattery,
    /// Detected-bird count a fixed horizon ahead, from time of day.
    FutureBirds,
}

/// Validity-guard choice for a declared estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardChoice {
    /// The role's default guard.
    Default,
    /// Accept every sample window.
    None,
    /// Reject windows in which the drone charged.
    ChargingFree,
}

/// How samples are gathered for a declared estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectorChoice {
    /// Snapshot every live drone on the observation stride.
    DronePeriodic,
    /// Snapshot the world series on the observation stride.
    WorldPeriodic,
    /// Snapshot the deciding drone whenever the charging rule enqueues it,
    /// at the horizon the rule queried.
    ChargingDecision,
    /// Open a waiting-time sample at enqueue, label it at charging start.
    EnqueueWait,
}

impl CollectorChoice {
    fn kind(self) -> CollectorKind {
        match self {
            CollectorChoice::DronePeriodic => CollectorKind::DronePeriodic,
            CollectorChoice::WorldPeriodic => CollectorKind::WorldPeriodic,
            CollectorChoice::ChargingDecision => CollectorKind::ChargingDecision,
            CollectorChoice::EnqueueWait => CollectorKind::EnqueueWait,
        }
    }
}

/// Regression backend family for a declared estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Constant,
    Mlp,
    Knn,
}

/// One declared estimator: a role plus optional overrides for its backend,
/// hyperparameters, guard, collector and horizon.  Unset fields fall back to
/// role-specific defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub id: String,
    pub role: EstimatorRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_value: Option<f64>,
    /// Prediction of a constant backend (defaults to the bootstrap value).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_value: Option<f64>,
    /// Neighbour count of a k-NN backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_layers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_activation: Option<OutputActivation>,
    /// Weight-initialisation seed (defaults to a hash of the id).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<GuardChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collector: Option<CollectorChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_min: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_max: Option<u64>,
}

/// Role-specific defaults an [`EstimatorConfig`] falls back to.
struct RoleDefaults {
    horizon: (u64, u64),
    guard: ValidityGuard,
    collector: CollectorChoice,
    backend: BackendChoice,
    bootstrap: f64,
    activation: OutputActivation,
}

impl EstimatorConfig {
    /// A declaration with every override unset.
    pub fn new(id: impl Into<String>, role: EstimatorRole) -> Self {
        Self {
            id: id.into(),
            role,
            backend: None,
            bootstrap_value: None,
            constant_value: None,
            k: None,
            hidden_layers: None,
            learning_rate: None,
            epochs: None,
            batch_size: None,
            output_activation: None,
            init_seed: None,
            guard: None,
            collector: None,
            horizon_min: None,
            horizon_max: None,
        }
    }

    fn role_defaults(&self) -> RoleDefaults {
        match self.role {
            EstimatorRole::WaitingTime => RoleDefaults {
                horizon: (1, 1),
                guard: ValidityGuard::AlwaysValid,
                collector: CollectorChoice::EnqueueWait,
                backend: BackendChoice::Mlp,
                bootstrap: 0.0,
                activation: OutputActivation::Softplus,
            },
            EstimatorRole::FutureBattery => RoleDefaults {
                horizon: (1, 200),
                guard: ValidityGuard::mode_never(DroneMode::Charging.as_str()),
                collector: CollectorChoice::DronePeriodic,
                backend: BackendChoice::Mlp,
                bootstrap: 0.5,
                activation: OutputActivation::Identity,
            },
            EstimatorRole::FutureBirds => RoleDefaults {
                // One charger round trip ahead: a drone warned of a coming
                // peak can top up and be back on post when it lands.
                horizon: (180, 180),
                guard: ValidityGuard::AlwaysValid,
                collector: CollectorChoice::WorldPeriodic,
                backend: BackendChoice::Knn,
                bootstrap: 0.0,
                activation: OutputActivation::Identity,
            },
        }
    }

    fn features(&self, world: &WorldConfig) -> (Vec<FeatureSpec>, FeatureSpec) {
        let fleet = world.n_drones as f64;
        match self.role {
            EstimatorRole::WaitingTime => (
                vec![
                    FeatureSpec::scalar("battery", "battery"),
                    FeatureSpec::scalar_min_max("queue_length", "queue_length", 0.0, fleet),
                    FeatureSpec::scalar_min_max("drones_charging", "drones_charging", 0.0, fleet),
                    FeatureSpec::scalar_min_max(
                        "drones_protecting",
                        "drones_protecting",
                        0.0,
                        fleet,
                    ),
                    FeatureSpec::scalar_min_max("drones_moving", "drones_moving", 0.0, fleet),
                    FeatureSpec::scalar_min_max(
                        "time_of_day",
                        "time_of_day",
                        0.0,
                        world.ticks_per_day as f64,
                    ),
                ],
                // The label comes from the trip ledger (charging start minus
                // enqueue tick); the extractor is never evaluated.
                FeatureSpec::scalar("waiting_ticks", "battery"),
            ),
            EstimatorRole::FutureBattery => (
                vec![
                    FeatureSpec::scalar("battery", "battery"),
                    FeatureSpec::one_hot("mode", "mode", DroneMode::alphabet()),
                ],
                FeatureSpec::scalar("battery", "battery"),
            ),
            EstimatorRole::FutureBirds => (
                vec![
                    FeatureSpec::scalar("tod_sin", "tod_sin"),
                    FeatureSpec::scalar("tod_cos", "tod_cos"),
                ],
                FeatureSpec::scalar("detected_birds", "detected_birds"),
            ),
        }
    }

    /// Resolve the declaration into a runnable handle and its collector.
    pub fn build(
        &self,
        world: &WorldConfig,
        replay_window: usize,
    ) -> Result<(EstimatorHandle, CollectorKind), HarnessError> {
        let defaults = self.role_defaults();
        let (inputs, output) = self.features(world);
        let bootstrap = self.bootstrap_value.unwrap_or(defaults.bootstrap);
        let backend = match self.backend.unwrap_or(defaults.backend) {
            BackendChoice::Constant => BackendKind::Constant {
                value: self.constant_value.unwrap_or(bootstrap),
            },
            BackendChoice::Mlp => {
                let base = MlpHyper::default();
                BackendKind::Mlp {
                    hyper: MlpHyper {
                        hidden_layers: self
                            .hidden_layers
                            .clone()
                            .unwrap_or(base.hidden_layers),
                        learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
                        epochs: self.epochs.unwrap_or(base.epochs),
                        batch_size: self.batch_size.unwrap_or(base.batch_size),
                        output_activation: self
                            .output_activation
                            .unwrap_or(defaults.activation),
                        init_seed: self.init_seed.unwrap_or_else(|| hash_seed(&self.id)),
                    },
                }
            }
            BackendChoice::Knn => BackendKind::Knn { k: self.k.unwrap_or(5) },
        };
        let guard = match self.guard.unwrap_or(GuardChoice::Default) {
            GuardChoice::Default => defaults.guard,
            GuardChoice::None => ValidityGuard::AlwaysValid,
            GuardChoice::ChargingFree => ValidityGuard::mode_never(DroneMode::Charging.as_str()),
        };
        let spec = EstimatorSpec {
            id: self.id.clone(),
            inputs,
            output,
            horizon: HorizonRange::new(
                self.horizon_min.unwrap_or(defaults.horizon.0),
                self.horizon_max.unwrap_or(defaults.horizon.1),
            ),
            guard,
            backend,
            bootstrap_value: bootstrap,
        };
        let handle = EstimatorHandle::with_window(spec, replay_window)
            .map_err(|e| HarnessError::config(format!("estimator '{}': {e}", self.id)))?;
        let kind = self.collector.unwrap_or(defaults.collector).kind();
        Ok((handle, kind))
    }
}

/// Full experiment configuration; the unit of reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub experiment: ExperimentSection,
    pub charging: ChargingSection,
    pub protection: ProtectionSection,
    pub sweep: SweepSection,
    pub estimators: Vec<EstimatorConfig>,
}

impl ExperimentConfig {
    /// The charging scenario driven by a learned waiting-time estimator.
    pub fn preset_charging() -> Self {
        let mut cfg = Self::default();
        cfg.estimators
            .push(EstimatorConfig::new("waitingTime", EstimatorRole::WaitingTime));
        cfg.charging.waiting_estimator = Some("waitingTime".into());
        cfg
    }

    /// The protection scenario driven by a learned bird forecast.
    pub fn preset_protection() -> Self {
        let mut cfg = Self::default();
        cfg.experiment.scenario = Scenario::Protection;
        cfg.estimators
            .push(EstimatorConfig::new("futureBirds", EstimatorRole::FutureBirds));
        cfg.protection.birds_estimator = Some("futureBirds".into());
        cfg
    }

    /// Built-in configuration by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" | "charging" => Some(Self::preset_charging()),
            "protection" => Some(Self::preset_protection()),
            _ => None,
        }
    }

    /// Load a preset name or a TOML file path.
    pub fn load(source: &str) -> Result<Self, HarnessError> {
        Self::load_with_overrides(source, &[])
    }

    /// Load like [`ExperimentConfig::load`], then apply `key.path=value`
    /// overrides before typing the result.
    pub fn load_with_overrides(source: &str, sets: &[String]) -> Result<Self, HarnessError> {
        let base = match Self::preset(source) {
            Some(cfg) => cfg,
            None => {
                let path = Path::new(source);
                let text = std::fs::read_to_string(path).map_err(|e| {
                    HarnessError::config(format!(
                        "'{source}' is neither a preset (default, charging, protection) \
                         nor a readable file: {e}"
                    ))
                })?;
                toml::from_str(&text)
                    .map_err(|e| HarnessError::config(format!("{source}: {e}")))?
            }
        };
        if sets.is_empty() {
            return Ok(base);
        }
        let mut value = toml::Value::try_from(&base)
            .map_err(|e| HarnessError::config(format!("serializing defaults: {e}")))?;
        for spec in sets {
            apply_override(&mut value, spec)?;
        }
        value
            .try_into()
            .map_err(|e| HarnessError::config(format!("after --set overrides: {e}")))
    }

    /// The fully resolved configuration as TOML, for echoing next to outputs.
    pub fn resolved_toml(&self) -> Result<String, HarnessError> {
        toml::to_string_pretty(self)
            .map_err(|e| HarnessError::config(format!("serializing config: {e}")))
    }

    /// Instantiate every declared estimator with its collector.
    pub fn build_estimator_set(&self) -> Result<EstimatorSet, HarnessError> {
        let mut set = EstimatorSet::new();
        for est in &self.estimators {
            if set.index_of(&est.id).is_some() {
                return Err(HarnessError::config(format!("duplicate estimator id '{}'", est.id)));
            }
            let (handle, kind) = est.build(&self.world, self.experiment.replay_window)?;
            set.register(handle, kind);
        }
        Ok(set)
    }

    fn estimator_index(&self, set: &EstimatorSet, id: &str) -> Result<usize, HarnessError> {
        set.index_of(id).ok_or_else(|| {
            let known: Vec<&str> = self.estimators.iter().map(|e| e.id.as_str()).collect();
            HarnessError::config(format!(
                "unknown estimator '{id}' (declared: {})",
                if known.is_empty() { "none".to_string() } else { known.join(", ") }
            ))
        })
    }

    /// Charging-scenario policy against `set` (independent of the scenario
    /// selector, so sweeps can request it directly).
    pub fn charging_policy(&self, set: &EstimatorSet) -> Result<Policy, HarnessError> {
        let c = &self.charging;
        let waiting = match &c.waiting_estimator {
            Some(id) => WaitingSource::Estimator(self.estimator_index(set, id)?),
            None => WaitingSource::Constant(c.waiting_constant),
        };
        let battery = match (&c.battery_estimator, c.battery_constant, c.battery_bound) {
            (Some(id), _, _) => BatterySource::Estimator(self.estimator_index(set, id)?),
            (None, Some(v), _) => BatterySource::Constant(v),
            (None, None, BatteryBound::Lower) => BatterySource::LowerBound,
            (None, None, BatteryBound::Upper) => BatterySource::UpperBound,
        };
        let params = ChargingRuleParams {
            safety_threshold: c.safety_threshold,
            max_horizon: c.max_horizon,
        };
        Ok(Policy::Charging(ChargingPolicy { params, waiting, battery }))
    }

    /// Protection-scenario policy against `set`.
    pub fn protection_policy(&self, set: &EstimatorSet) -> Result<Policy, HarnessError> {
        let p = &self.protection;
        let birds = match &p.birds_estimator {
            Some(id) => BirdsSource::Estimator(self.estimator_index(set, id)?),
            None => BirdsSource::Constant(p.birds_constant),
        };
        let params = ProtectionRuleParams { b: p.b, c: p.c, f: p.f };
        Ok(Policy::Protection(ProtectionPolicy { params, birds }))
    }

    /// The policy selected by `experiment.scenario`.
    pub fn build_policy(&self, set: &EstimatorSet) -> Result<Policy, HarnessError> {
        match self.experiment.scenario {
            Scenario::Charging => self.charging_policy(set),
            Scenario::Protection => self.protection_policy(set),
        }
    }

    /// Check everything a run would need: world geometry, loop settings,
    /// estimator declarations, and that the scenario policy validates against
    /// a probe world (parameters in range, references resolved, features
    /// readable from the snapshots their collectors supply).
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.world
            .validate()
            .map_err(|e| HarnessError::config(format!("world: {e}")))?;
        let e = &self.experiment;
        if e.n_iterations < 1 {
            return Err(HarnessError::config("experiment.n_iterations must be at least 1"));
        }
        if e.runs_per_iteration < 1 {
            return Err(HarnessError::config("experiment.runs_per_iteration must be at least 1"));
        }
        if e.seeds.is_empty() {
            return Err(HarnessError::config("experiment.seeds must not be empty"));
        }
        if e.replay_window < 1 {
            return Err(HarnessError::config("experiment.replay_window must be at least 1"));
        }
        if !(e.test_fraction > 0.0 && e.test_fraction < 1.0) {
            return Err(HarnessError::config("experiment.test_fraction must be in (0, 1)"));
        }
        let set = self.build_estimator_set()?;
        let policy = self.build_policy(&set)?;
        let probe = World::new(&self.world, 0)
            .map_err(|e| HarnessError::config(format!("world: {e}")))?;
        probe
            .validate_policy(&policy, &set)
            .map_err(|e| HarnessError::config(e.to_string()))?;
        Ok(())
    }
}

/// Apply one `key.path=value` override to a TOML tree.  Path segments index
/// tables by key and arrays by number; the value is parsed as TOML, falling
/// back to a bare string (so estimator names need no quoting).
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<(), HarnessError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::config(format!("--set '{spec}': expected key.path=value")))?;
    let (path, raw) = (path.trim(), raw.trim());
    if path.is_empty() {
        return Err(HarnessError::config(format!("--set '{spec}': empty key path")));
    }
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").expect("parsed document has key v"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let segments: Vec<&str> = path.split('.').collect();
    let mut cursor = root;
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth == segments.len() - 1;
        match cursor {
            toml::Value::Table(table) => {
                if last {
                    table.insert(seg.to_string(), parsed);
                    return Ok(());
                }
                cursor = table
                    .entry(seg.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            }
            toml::Value::Array(array) => {
                let index: usize = seg.parse().map_err(|_| {
                    HarnessError::config(format!(
                        "--set '{spec}': '{seg}' must be an array index"
                    ))
                })?;
                let len = array.len();
                let slot = array.get_mut(index).ok_or_else(|| {
                    HarnessError::config(format!(
                        "--set '{spec}': index {index} out of bounds (len {len})"
                    ))
                })?;
                if last {
                    *slot = parsed;
                    return Ok(());
                }
                cursor = slot;
            }
            other => {
                return Err(HarnessError::config(format!(
                    "--set '{spec}': '{seg}' cannot descend into a {}",
                    other.type_str()
                )));
            }
        }
    }
    unreachable!("loop returns on the last segment");
}
