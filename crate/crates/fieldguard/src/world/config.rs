//! World geometry, timing and dynamics configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 2-D point/vector in abstract field units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Vec2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Move from `self` toward `target` by at most `step`, landing exactly on
    /// the target when within reach.
    pub fn step_toward(&self, target: Vec2, step: f64) -> Vec2 {
        let d = self.distance(target);
        if d <= step || d == 0.0 {
            target
        } else {
            let f = step / d;
            Vec2::new(self.x + (target.x - self.x) * f, self.y + (target.y - self.y) * f)
        }
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// Two-Gaussian daily bird-attack intensity.
///
/// `p(t) = amp1·exp(−(t−peak1)²/(2σ1²)) + amp2·exp(−(t−peak2)²/(2σ2²))`,
/// clamped to `[0, 1]`.  Defaults put a large peak at 9 AM (tick 540) and a
/// smaller one at 3 PM (tick 900).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackParams {
    pub peak1_tick: f64,
    pub peak1_amp: f64,
    pub peak1_sigma: f64,
    pub peak2_tick: f64,
    pub peak2_amp: f64,
    pub peak2_sigma: f64,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            peak1_tick: 540.0,
            peak1_amp: 0.9,
            peak1_sigma: 90.0,
            peak2_tick: 900.0,
            peak2_amp: 0.5,
            peak2_sigma: 90.0,
        }
    }
}

/// Full static configuration of one simulated world.
///
/// Every constant of the dynamics lives here so that experiment configs can
/// state and sweep them; [`WorldConfig::default`] is the reference setup:
/// a 100×100 field of 10×10 crop cells, 12 drones on a 4×3 hover grid, a
/// 9-slot charger at the middle of the south field edge, and one simulated
/// day of 1440 one-minute ticks.
///
/// The slot count is deliberately scarce: when every drone runs its battery
/// to the wire, the synchronized first wave overflows the charger and the
/// overflow drones die waiting, while conservative schedules keep everyone
/// alive at the price of more time off the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Ticks per simulated day (1 tick = 1 minute).
    pub ticks_per_day: u64,
    /// Total ticks simulated by one run.
    pub run_length: u64,
    pub n_drones: usize,
    pub n_birds: usize,
    pub field_width: f64,
    pub field_height: f64,
    /// Crop-cell grid resolution.
    pub cells_x: usize,
    pub cells_y: usize,
    /// Protection positions; drone `i` is assigned `hover_points[i]`.
    pub hover_points: Vec<Vec2>,
    pub charger_pos: Vec2,
    pub charger_slots: usize,
    /// Flight speed, units per tick.
    pub drone_speed: f64,
    /// Battery drain per tick while flying.
    pub moving_consumption: f64,
    /// Battery drain per tick while hovering (protecting or waiting).
    pub hovering_consumption: f64,
    /// Battery gain per tick in a charger slot.
    pub charging_rate: f64,
    /// Birds within this distance of a posted drone are scared off.
    pub scare_radius: f64,
    /// Crop integrity lost per attacking bird per tick.
    pub bird_damage_per_tick: f64,
    pub attack: AttackParams,
    /// Per-idle-bird attack initiation probability is
    /// `attack_probability(t) · bird_activity`.
    pub bird_activity: f64,
    /// Per-tick probability that an (unscared) attacking bird leaves on its
    /// own, keeping attack durations finite.
    pub attack_leave_prob: f64,
    /// Ticks a scared bird stays away before it can attack again.
    pub flee_cooldown: u64,
    /// Estimators observe every `observation_stride` ticks.
    pub observation_stride: u64,
    /// Record per-decision rows (tick, drone, rule, decision, threshold,
    /// prediction) in the result.
    pub log_decisions: bool,
    pub seed: u64,
}

/// Evenly spaced `cols × rows` grid of hover points covering the field
/// (points at cell centers of the coarse grid).
pub fn hover_grid(cols: usize, rows: usize, width: f64, height: f64) -> Vec<Vec2> {
    let mut points = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            points.push(Vec2::new(
                width * (2 * col + 1) as f64 / (2 * cols) as f64,
                height * (2 * row + 1) as f64 / (2 * rows) as f64,
            ));
        }
    }
    points
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            ticks_per_day: 1440,
            run_length: 1440,
            n_drones: 12,
            n_birds: 100,
            field_width: 100.0,
            field_height: 100.0,
            cells_x: 10,
            cells_y: 10,
            hover_points: hover_grid(4, 3, 100.0, 100.0),
            charger_pos: Vec2::new(50.0, 0.0),
            charger_slots: 9,
            drone_speed: 2.0,
            moving_consumption: 0.0045,
            hovering_consumption: 0.0025,
            charging_rate: 1.0 / 200.0,
            scare_radius: 15.0,
            bird_damage_per_tick: 0.001,
            attack: AttackParams::default(),
            bird_activity: 0.02,
            attack_leave_prob: 0.025,
            flee_cooldown: 15,
            observation_stride: 1,
            log_decisions: false,
            seed: 1,
        }
    }
}

/// Configuration and construction errors of the world.
#[derive(Debug, Error)]
pub enum WorldError {
    #[error("hovering consumption {hovering} must be strictly below moving consumption {moving}")]
    ConsumptionOrder { hovering: f64, moving: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("charger needs at least one slot")]
    NoSlots,
    #[error("need at least one drone")]
    NoDrones,
    #[error("{n_drones} drones but only {n_points} hover points")]
    TooFewHoverPoints { n_drones: usize, n_points: usize },
    #[error("tick-of-day {t} outside the day of {ticks_per_day} ticks")]
    TickOutOfDay { t: u64, ticks_per_day: u64 },
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error(transparent)]
    Estimator(#[from] crate::estimator::EstimatorError),
    #[error(transparent)]
    Rules(Box<crate::rules::RulesError>),
    #[error("policy references estimator {0}, which is not registered")]
    UnknownEstimator(String),
    #[error("bird prediction table has {got} entries, need one per tick of day ({expected})")]
    BirdTableLength { expected: usize, got: usize },
}

impl From<crate::rules::RulesError> for WorldError {
    fn from(e: crate::rules::RulesError) -> Self {
        WorldError::Rules(Box::new(e))
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.hovering_consumption >= self.moving_consumption {
            return Err(WorldError::ConsumptionOrder {
                hovering: self.hovering_consumption,
                moving: self.moving_consumption,
            });
        }
        for (name, value) in [
            ("ticks_per_day", self.ticks_per_day as f64),
            ("observation_stride", self.observation_stride as f64),
            ("drone_speed", self.drone_speed),
            ("moving_consumption", self.moving_consumption),
            ("hovering_consumption", self.hovering_consumption),
            ("charging_rate", self.charging_rate),
            ("field_width", self.field_width),
            ("field_height", self.field_height),
            ("cells_x", self.cells_x as f64),
            ("cells_y", self.cells_y as f64),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(WorldError::NonPositive { name, value });
            }
        }
        if self.charger_slots == 0 {
            return Err(WorldError::NoSlots);
        }
        if self.n_drones == 0 {
            return Err(WorldError::NoDrones);
        }
        if self.n_drones > self.hover_points.len() {
            return Err(WorldError::TooFewHoverPoints {
                n_drones: self.n_drones,
                n_points: self.hover_points.len(),
            });
        }
        for (name, value) in [
            ("bird_activity", self.bird_activity),
            ("attack_leave_prob", self.attack_leave_prob),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(WorldError::OutOfUnitRange { name, value });
            }
        }
        Ok(())
    }

    /// Ceiling flight time from `from` to `to` at `drone_speed`.
    pub fn time_to_fly(&self, from: Vec2, to: Vec2) -> u64 {
        time_to_fly(from, to, self.drone_speed)
    }

    /// Battery cost of that flight at `moving_consumption`.
    pub fn energy_to_fly(&self, from: Vec2, to: Vec2) -> f64 {
        self.time_to_fly(from, to) as f64 * self.moving_consumption
    }
}

/// Whole ticks needed to cover the distance at `speed` (ceiling).
pub fn time_to_fly(from: Vec2, to: Vec2, speed: f64) -> u64 {
    debug_assert!(speed > 0.0);
    (from.distance(to) / speed).ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        WorldConfig::default().validate().unwrap();
    }

    #[test]
    fn default_hover_grid_covers_the_field_evenly() {
        let cfg = WorldConfig::default();
        assert_eq!(cfg.hover_points.len(), 12);
        assert_eq!(cfg.hover_points[0], Vec2::new(12.5, 100.0 / 6.0));
        assert_eq!(cfg.hover_points[3], Vec2::new(87.5, 100.0 / 6.0));
        assert_eq!(cfg.hover_points[11].x, 87.5);
        assert!((cfg.hover_points[11].y - 250.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn consumption_ordering_is_enforced() {
        let cfg = WorldConfig {
            hovering_consumption: 0.005,
            moving_consumption: 0.004,
            ..WorldConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(WorldError::ConsumptionOrder { .. })
        ));
    }

    #[test]
    fn default_charging_rate_fills_in_200_ticks() {
        let cfg = WorldConfig::default();
        assert!((cfg.charging_rate - 0.005).abs() < 1e-12);
        assert!((1.0 / cfg.charging_rate - 200.0).abs() < 1e-9);
    }

    #[test]
    fn structural_limits_are_enforced() {
        let mut cfg = WorldConfig::default();
        cfg.charger_slots = 0;
        assert!(matches!(cfg.validate(), Err(WorldError::NoSlots)));

        let mut cfg = WorldConfig::default();
        cfg.n_drones = 0;
        assert!(matches!(cfg.validate(), Err(WorldError::NoDrones)));

        let mut cfg = WorldConfig::default();
        cfg.n_drones = 13;
        assert!(matches!(
            cfg.validate(),
            Err(WorldError::TooFewHoverPoints { n_drones: 13, n_points: 12 })
        ));
    }

    #[test]
    fn flight_time_is_ceiling_of_distance_over_speed() {
        let origin = Vec2::new(0.0, 0.0);
        assert_eq!(time_to_fly(origin, origin, 2.0), 0);
        assert_eq!(time_to_fly(origin, Vec2::new(10.0, 0.0), 1.0), 10);
        assert_eq!(time_to_fly(origin, Vec2::new(10.0, 0.0), 3.0), 4);
    }

    #[test]
    fn flight_energy_uses_moving_consumption() {
        let cfg = WorldConfig {
            drone_speed: 1.0,
            ..WorldConfig::default()
        };
        let origin = Vec2::new(0.0, 0.0);
        assert_eq!(cfg.energy_to_fly(origin, origin), 0.0);
        // 100 ticks at the default 0.0045 per tick.
        let e = cfg.energy_to_fly(origin, Vec2::new(100.0, 0.0));
        assert!((e - 0.45).abs() < 1e-12);
    }

    #[test]
    fn flight_energy_is_monotone_in_distance() {
        let cfg = WorldConfig::default();
        let origin = Vec2::new(0.0, 0.0);
        let mut prev = -1.0;
        for d in [0.0, 1.0, 5.0, 20.0, 90.0, 200.0] {
            let e = cfg.energy_to_fly(origin, Vec2::new(d, 0.0));
            assert!(e >= prev, "energy must not decrease with distance");
            prev = e;
        }
    }

    #[test]
    fn step_toward_clamps_at_target() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(3.0, 4.0);
        let mid = a.step_toward(b, 2.5);
        assert!((mid.distance(a) - 2.5).abs() < 1e-12);
        assert_eq!(a.step_toward(b, 10.0), b);
        assert_eq!(b.step_toward(b, 1.0), b);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = WorldConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: WorldConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        // Partial configs take defaults for missing fields.
        let partial: WorldConfig = toml::from_str("n_drones = 4\nseed = 9").unwrap();
        assert_eq!(partial.n_drones, 4);
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.ticks_per_day, 1440);
    }
}
