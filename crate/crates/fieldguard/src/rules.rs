//! Adaptation rules: when a drone gives up its post to charge (charging
//! rule / protection rule), and when a queued drone actually flies off
//! (release rule).  All rules are pure decision functions; the simulation
//! evaluates them each tick and applies the outcomes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::EstimatorError;
use crate::world::{expected_slot_free_tick, QueueMemberInfo, WorldConfig};

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("bound target tick {target} lies before now {now}")]
    TargetBeforeNow { now: u64, target: u64 },
    #[error("policy references estimator index {index}, but only {registered} are registered")]
    EstimatorIndex { index: usize, registered: usize },
    #[error("safety threshold must lie strictly inside (0, 1), got {0}")]
    InvalidSafetyThreshold(f64),
    #[error(
        "threshold coefficients must be finite, non-negative and sum below 1, got b={b} c={c} f={f}"
    )]
    InvalidCoefficients { b: f64, c: f64, f: f64 },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Parameters of the battery-safety charging rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChargingRuleParams {
    /// A drone enqueues when its forecast battery at charging start drops
    /// below this floor.
    pub safety_threshold: f64,
    /// Longest lookahead the rule will query.
    pub max_horizon: u64,
}

impl Default for ChargingRuleParams {
    fn default() -> Self {
        Self { safety_threshold: 0.2, max_horizon: 200 }
    }
}

impl ChargingRuleParams {
    pub fn validate(&self) -> Result<(), RulesError> {
        if !(self.safety_threshold.is_finite()
            && self.safety_threshold > 0.0
            && self.safety_threshold < 1.0)
        {
            return Err(RulesError::InvalidSafetyThreshold(self.safety_threshold));
        }
        Ok(())
    }
}

/// Coefficients of the bird-aware protection rule threshold
/// `b + c·current + f·predicted`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtectionRuleParams {
    pub b: f64,
    pub c: f64,
    pub f: f64,
}

impl Default for ProtectionRuleParams {
    fn default() -> Self {
        Self { b: 0.1, c: 0.2, f: 0.2 }
    }
}

impl ProtectionRuleParams {
    pub fn validate(&self) -> Result<(), RulesError> {
        let ok = [self.b, self.c, self.f]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && self.b + self.c + self.f < 1.0;
        if ok {
            Ok(())
        } else {
            Err(RulesError::InvalidCoefficients { b: self.b, c: self.c, f: self.f })
        }
    }
}

/// Charging-rule evaluation for one drone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargingOutcome {
    /// Lookahead actually queried: ⌈predicted waiting⌉ + fly time, clamped.
    pub delta: u64,
    /// Forecast battery at that lookahead.
    pub future_battery: f64,
    pub enqueue: bool,
}

/// Decide whether a drone should join the charger queue.
///
/// The lookahead is the predicted waiting time plus the drone's fly time to
/// the charger, capped at `horizon_max`; the drone enqueues when the battery
/// forecast at that lookahead falls below the safety threshold.
pub fn charging_decision(
    predicted_waiting: f64,
    fly_ticks: u64,
    horizon_max: u64,
    params: &ChargingRuleParams,
    future_battery: impl FnOnce(u64) -> Result<f64, RulesError>,
) -> Result<ChargingOutcome, RulesError> {
    let wait = predicted_waiting.max(0.0).ceil() as u64;
    let delta = (wait + fly_ticks).min(horizon_max);
    let forecast = future_battery(delta)?;
    Ok(ChargingOutcome {
        delta,
        future_battery: forecast,
        enqueue: forecast < params.safety_threshold,
    })
}

/// Release-rule evaluation for the head region of the queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReleaseOutcome {
    /// Tick at which a slot is expected to free up for this drone.
    pub expected_free: u64,
    pub fly: bool,
}

/// Decide whether a queued drone should leave its post now.
///
/// It flies as soon as the forecast slot availability is within its fly
/// time, so that it lands roughly when its slot frees up.
pub fn release_decision(
    now: u64,
    fly_ticks: u64,
    slots: usize,
    occupant_remaining: &[u64],
    ahead: &[QueueMemberInfo],
) -> ReleaseOutcome {
    let expected_free = expected_slot_free_tick(now, slots, occupant_remaining, ahead);
    ReleaseOutcome {
        expected_free,
        fly: expected_free.saturating_sub(now) <= fly_ticks,
    }
}

/// Protection-rule evaluation for one drone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionOutcome {
    /// `b + c·current + f·predicted`.
    pub threshold: f64,
    pub enqueue: bool,
}

/// Decide whether a drone should give up protecting under bird pressure.
///
/// `current_frac` and `predicted_frac` are bird counts normalized to
/// `[0, 1]`; the drone enqueues when the battery it would have left after
/// flying to the charger (floored at 0) is strictly below the threshold.
/// With all coefficients 0 the threshold is 0 and no drone ever enqueues.
pub fn protection_decision(
    battery: f64,
    energy_to_fly: f64,
    current_frac: f64,
    predicted_frac: f64,
    params: &ProtectionRuleParams,
) -> ProtectionOutcome {
    let threshold = params.b + params.c * current_frac + params.f * predicted_frac;
    let left_after_flight = (battery - energy_to_fly).max(0.0);
    ProtectionOutcome { threshold, enqueue: left_after_flight < threshold }
}

/// Physics-derived battery forecast band for a protecting drone.
///
/// Between `now` and `target` the drone drains at least the hovering rate
/// and at most the moving rate per tick, so its battery lies in
/// `[battery − Δ·moving, battery − Δ·hovering]`, clamped to `[0, 1]`.
/// Returns `(lower, upper)`.
pub fn future_battery_bounds(
    battery: f64,
    now: u64,
    target: u64,
    cfg: &WorldConfig,
) -> Result<(f64, f64), RulesError> {
    if target < now {
        return Err(RulesError::TargetBeforeNow { now, target });
    }
    let delta = (target - now) as f64;
    let lower = (battery - delta * cfg.moving_consumption).clamp(0.0, 1.0);
    let upper = (battery - delta * cfg.hovering_consumption).clamp(0.0, 1.0);
    Ok((lower, upper))
}

/// One bound as a plain forecast: battery after `delta` ticks at `rate`.
pub fn bound_forecast(battery: f64, delta: u64, rate: f64) -> f64 {
    (battery - delta as f64 * rate).clamp(0.0, 1.0)
}

/// Waiting-time forecast source of the charging rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WaitingSource {
    Constant(f64),
    /// Index of a registered waiting-time estimator.
    Estimator(usize),
}

/// Battery forecast source of the charging rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatterySource {
    /// Physics bound assuming the drone moves the whole horizon.
    LowerBound,
    /// Physics bound assuming the drone hovers the whole horizon.
    UpperBound,
    Constant(f64),
    /// Index of a registered future-battery estimator.
    Estimator(usize),
}

/// Bird forecast source of the protection rule.
#[derive(Debug, Clone, PartialEq)]
pub enum BirdsSource {
    /// Fixed predicted bird count.
    Constant(f64),
    /// Index of a registered future-birds estimator.
    Estimator(usize),
    /// Precomputed prediction per tick of day (len = ticks per day); used by
    /// sweeps so every grid point queries identical forecasts.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargingPolicy {
    pub params: ChargingRuleParams,
    pub waiting: WaitingSource,
    pub battery: BatterySource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtectionPolicy {
    pub params: ProtectionRuleParams,
    pub birds: BirdsSource,
}

/// Which adaptation rules govern the drones during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// No rule ever enqueues; drones protect until their batteries die.
    AlwaysProtect,
    Charging(ChargingPolicy),
    Protection(ProtectionPolicy),
}

impl Policy {
    /// Charging rule with a fixed waiting-time forecast and the
    /// moving-consumption battery bound — the constant-baseline policy.
    pub fn charging_constant(waiting: f64) -> Policy {
        Policy::Charging(ChargingPolicy {
            params: ChargingRuleParams::default(),
            waiting: WaitingSource::Constant(waiting),
            battery: BatterySource::LowerBound,
        })
    }

    /// Protection rule with fixed coefficients and a prediction table.
    pub fn protection_table(params: ProtectionRuleParams, table: Vec<f64>) -> Policy {
        Policy::Protection(ProtectionPolicy { params, birds: BirdsSource::Table(table) })
    }

    /// Validate rule parameters and estimator references against the number
    /// of registered estimators.
    pub fn validate(&self, registered: usize) -> Result<(), RulesError> {
        let check = |index: usize| {
            if index < registered {
                Ok(())
            } else {
                Err(RulesError::EstimatorIndex { index, registered })
            }
        };
        match self {
            Policy::AlwaysProtect => Ok(()),
            Policy::Charging(cp) => {
                cp.params.validate()?;
                if let WaitingSource::Estimator(i) = cp.waiting {
                    check(i)?;
                }
                if let BatterySource::Estimator(i) = cp.battery {
                    check(i)?;
                }
                Ok(())
            }
            Policy::Protection(pp) => {
                pp.params.validate()?;
                if let BirdsSource::Estimator(i) = &pp.birds {
                    check(*i)?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Arrival;

    #[test]
    fn low_forecast_battery_triggers_enqueue() {
        // Predicted waiting 30 + fly 10 → lookahead 40; forecast 0.15 is
        // below the 0.2 floor.
        let out = charging_decision(30.0, 10, 200, &ChargingRuleParams::default(), |d| {
            assert_eq!(d, 40);
            Ok(0.15)
        })
        .unwrap();
        assert_eq!(out.delta, 40);
        assert!(out.enqueue);
    }

    #[test]
    fn full_battery_with_zero_waiting_stays() {
        let cfg = WorldConfig::default();
        let out = charging_decision(0.0, 10, 200, &ChargingRuleParams::default(), |d| {
            Ok(bound_forecast(1.0, d, cfg.hovering_consumption))
        })
        .unwrap();
        assert_eq!(out.delta, 10);
        assert!(!out.enqueue);
    }

    #[test]
    fn lookahead_clamps_to_the_horizon() {
        let out = charging_decision(250.0, 10, 200, &ChargingRuleParams::default(), |d| {
            assert_eq!(d, 200, "260 clamps to the 200-tick horizon");
            Ok(0.5)
        })
        .unwrap();
        assert_eq!(out.delta, 200);
        assert!(!out.enqueue);
    }

    #[test]
    fn fractional_waiting_rounds_up() {
        let out =
            charging_decision(2.3, 5, 200, &ChargingRuleParams::default(), |d| Ok(d as f64))
                .unwrap();
        assert_eq!(out.delta, 8);
    }

    #[test]
    fn queue_head_with_empty_charger_flies_immediately() {
        let out = release_decision(50, 10, 2, &[], &[]);
        assert_eq!(out.expected_free, 50);
        assert!(out.fly);
    }

    #[test]
    fn head_waits_until_the_slot_is_a_flight_away() {
        // One slot, occupant needs 100 ticks, fly time 10: stay while the
        // occupant still needs more than 10 ticks, fly at exactly 10.
        for remaining in [100, 50, 11] {
            let out = release_decision(0, 10, 1, &[remaining], &[]);
            assert!(!out.fly, "remaining {remaining} is beyond the fly time");
        }
        let out = release_decision(0, 10, 1, &[10], &[]);
        assert_eq!(out.expected_free, 10);
        assert!(out.fly);
    }

    #[test]
    fn second_in_queue_is_never_released_before_the_head() {
        // The head (still at its post, service 80) claims the slot first.
        let head = [QueueMemberInfo { arrival: Arrival::WhenSlotFrees, service_ticks: 80 }];
        for remaining in [100, 10, 0] {
            let head_out = release_decision(0, 10, 1, &[remaining], &[]);
            let second_out = release_decision(0, 10, 1, &[remaining], &head);
            assert!(second_out.expected_free >= head_out.expected_free + 80);
            if second_out.fly {
                assert!(head_out.fly, "second may not fly while the head stays");
            }
        }
    }

    #[test]
    fn zero_coefficients_never_enqueue() {
        let params = ProtectionRuleParams { b: 0.0, c: 0.0, f: 0.0 };
        for battery in [1.0, 0.5, 0.1, 0.0] {
            for birds in [0.0, 0.5, 1.0] {
                let out = protection_decision(battery, 0.15, birds, birds, &params);
                assert!(!out.enqueue, "battery {battery}, birds {birds}");
            }
        }
    }

    #[test]
    fn threshold_arithmetic_matches_the_worked_example() {
        let params = ProtectionRuleParams { b: 0.1, c: 0.2, f: 0.3 };
        let out = protection_decision(0.6, 0.15, 0.5, 1.0, &params);
        assert!((out.threshold - 0.5).abs() < 1e-12);
        assert!(out.enqueue, "0.45 left after flight is below 0.5");
    }

    #[test]
    fn with_f_zero_the_prediction_is_irrelevant() {
        let params = ProtectionRuleParams { b: 0.2, c: 0.3, f: 0.0 };
        let a = protection_decision(0.5, 0.1, 0.4, 0.0, &params);
        let b = protection_decision(0.5, 0.1, 0.4, 1.0, &params);
        assert_eq!(a, b);
    }

    #[test]
    fn bounds_match_the_worked_example() {
        let cfg = WorldConfig::default();
        let (lower, upper) = future_battery_bounds(0.8, 500, 600, &cfg).unwrap();
        assert!((upper - 0.55).abs() < 1e-12);
        assert!((lower - 0.35).abs() < 1e-12);
    }

    #[test]
    fn zero_lookahead_bounds_are_the_battery_itself() {
        let cfg = WorldConfig::default();
        let (lower, upper) = future_battery_bounds(0.8, 42, 42, &cfg).unwrap();
        assert_eq!((lower, upper), (0.8, 0.8));
    }

    #[test]
    fn bounds_clamp_to_the_unit_interval() {
        let cfg = WorldConfig::default();
        let (lower, upper) = future_battery_bounds(0.3, 0, 1000, &cfg).unwrap();
        assert_eq!(lower, 0.0);
        assert!(upper >= 0.0);
    }

    #[test]
    fn past_targets_are_rejected() {
        let cfg = WorldConfig::default();
        assert!(matches!(
            future_battery_bounds(0.8, 100, 99, &cfg),
            Err(RulesError::TargetBeforeNow { now: 100, target: 99 })
        ));
    }

    #[test]
    fn parameter_validation_rejects_bad_values() {
        assert!(ChargingRuleParams::default().validate().is_ok());
        for st in [0.0, 1.0, -0.1, f64::NAN] {
            let p = ChargingRuleParams { safety_threshold: st, ..Default::default() };
            assert!(p.validate().is_err(), "threshold {st}");
        }
        assert!(ProtectionRuleParams::default().validate().is_ok());
        let p = ProtectionRuleParams { b: 0.4, c: 0.3, f: 0.3 };
        assert!(p.validate().is_err(), "coefficients summing to 1 are invalid");
        let p = ProtectionRuleParams { b: -0.1, c: 0.0, f: 0.0 };
        assert!(p.validate().is_err());
    }
}
