//! Deterministic crop-protection world: drones hover over a field of crop
//! cells, birds attack in a two-peak daily pattern, and a shared charging
//! station constrains how long the fleet can stay airborne.
//!
//! Each tick advances in a fixed phase order — birds, adaptation rules,
//! drone physics, charger bookkeeping, estimator observation — so that runs
//! are bit-reproducible for a given configuration and seed.

mod birds;
mod charger;
mod collect;
mod config;
mod drone;
mod log;
mod result;

pub use birds::{attack_probability, Bird, BirdState};
pub use charger::{expected_slot_free_tick, Arrival, Charger, QueueMemberInfo};
pub use collect::{CollectorKind, EstimatorEntry, EstimatorRunData, EstimatorSet};
pub use config::{hover_grid, time_to_fly, AttackParams, Vec2, WorldConfig, WorldError};
pub use drone::{Drone, DroneMode};
pub use log::{DroneRecord, HistoryLog, WorldRecord};
pub use result::{DecisionRecord, SimResult, TripRecord};

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::estimator::{EntityId, Snapshot};
use crate::rng::{mix_seed, rng_from_seed};
use crate::rules::{
    charging_decision, bound_forecast, protection_decision, release_decision, BatterySource,
    BirdsSource, ChargingPolicy, Policy, ProtectionPolicy, WaitingSource,
};

/// Sub-stream of the run seed driving world dynamics (birds).
const DYNAMICS_STREAM: u64 = 1;
/// Sub-stream driving estimator horizon draws, so that attaching collectors
/// does not perturb the dynamics.
const ESTIMATOR_STREAM: u64 = 2;

/// Snapshot holding only the time-of-day features for tick `t`: the phase
/// encoded as `tod_sin`/`tod_cos` plus the raw `time_of_day` tick count.
///
/// This is the exact encoding world snapshots use, exposed standalone so
/// day-periodic estimators (e.g. bird forecasts) can be queried for an
/// arbitrary tick of day without a live world.
pub fn time_of_day_snapshot(t: u64, ticks_per_day: u64) -> Snapshot {
    let phase = TAU * ((t % ticks_per_day) as f64 / ticks_per_day as f64);
    Snapshot::new()
        .with_scalar("tod_sin", phase.sin())
        .with_scalar("tod_cos", phase.cos())
        .with_scalar("time_of_day", (t % ticks_per_day) as f64)
}

#[derive(Debug, Clone)]
struct OpenTrip {
    t_enqueued: u64,
    battery_enqueued: f64,
    t_released: Option<u64>,
    t_arrived: Option<u64>,
}

/// Full mutable state of one simulation.
#[derive(Debug, Clone)]
pub struct World {
    pub cfg: WorldConfig,
    pub clock: u64,
    pub drones: Vec<Drone>,
    pub birds: Vec<Bird>,
    /// Crop integrity per cell, row-major, each in `[0, 1]`.
    pub cells: Vec<f64>,
    pub charger: Charger,
    pub history: HistoryLog,
    pub trips: Vec<TripRecord>,
    pub decisions: Vec<DecisionRecord>,
    seed: u64,
    rng: ChaCha8Rng,
    est_rng: ChaCha8Rng,
    cell_centers: Vec<Vec2>,
    last_attacking: usize,
    last_detected: usize,
    open_trips: Vec<Option<OpenTrip>>,
    waiting_pred_sum: f64,
    waiting_pred_count: u64,
}

impl World {
    /// Build the initial world: every drone fully charged and protecting at
    /// its hover point, all birds idle, all cells intact, clock 0.
    pub fn new(cfg: &WorldConfig, seed: u64) -> Result<Self, WorldError> {
        cfg.validate()?;
        let drones = (0..cfg.n_drones)
            .map(|i| Drone::new(i, cfg.hover_points[i]))
            .collect();
        let birds = (0..cfg.n_birds).map(Bird::new).collect();
        let n_cells = cfg.cells_x * cfg.cells_y;
        let cell_w = cfg.field_width / cfg.cells_x as f64;
        let cell_h = cfg.field_height / cfg.cells_y as f64;
        let cell_centers = (0..n_cells)
            .map(|i| {
                let col = (i % cfg.cells_x) as f64;
                let row = (i / cfg.cells_x) as f64;
                Vec2::new((col + 0.5) * cell_w, (row + 0.5) * cell_h)
            })
            .collect();
        let mut world = Self {
            cfg: cfg.clone(),
            clock: 0,
            drones,
            birds,
            cells: vec![1.0; n_cells],
            charger: Charger::new(cfg.charger_pos, cfg.charger_slots),
            history: HistoryLog::new(cfg.n_drones, cfg.ticks_per_day),
            trips: Vec::new(),
            decisions: Vec::new(),
            seed,
            rng: rng_from_seed(mix_seed(seed, DYNAMICS_STREAM)),
            est_rng: rng_from_seed(mix_seed(seed, ESTIMATOR_STREAM)),
            cell_centers,
            last_attacking: 0,
            last_detected: 0,
            open_trips: vec![None; cfg.n_drones],
            waiting_pred_sum: 0.0,
            waiting_pred_count: 0,
        };
        world.record_state();
        Ok(world)
    }

    pub fn damage_rate(&self) -> f64 {
        1.0 - self.cells.iter().sum::<f64>() / self.cells.len() as f64
    }

    pub fn survived_drones(&self) -> usize {
        self.drones
            .iter()
            .filter(|d| d.mode != DroneMode::Terminated)
            .count()
    }

    fn mode_counts(&self) -> (usize, usize, usize) {
        let mut charging = 0;
        let mut protecting = 0;
        let mut moving = 0;
        for d in &self.drones {
            match d.mode {
                DroneMode::Charging => charging += 1,
                DroneMode::Protecting => protecting += 1,
                DroneMode::MovingToCharger => moving += 1,
                DroneMode::Idle | DroneMode::Terminated => {}
            }
        }
        (charging, protecting, moving)
    }

    fn mean_battery(&self) -> f64 {
        self.drones.iter().map(|d| d.battery).sum::<f64>() / self.drones.len() as f64
    }

    /// Snapshot of one drone: scalar `battery`, symbol `mode`.
    pub fn drone_snapshot(&self, d: usize) -> Snapshot {
        let drone = &self.drones[d];
        Snapshot::new()
            .with_scalar("battery", drone.battery)
            .with_symbol("mode", drone.mode.as_str())
    }

    /// Aggregate snapshot for tick `t`: time-of-day features plus the latest
    /// bird counts, fleet mode counts, queue length and mean battery.
    pub fn world_snapshot(&self, t: u64) -> Snapshot {
        let (charging, protecting, moving) = self.mode_counts();
        time_of_day_snapshot(t, self.cfg.ticks_per_day)
            .with_scalar("attacking_birds", self.last_attacking as f64)
            .with_scalar("detected_birds", self.last_detected as f64)
            .with_scalar("queue_length", self.charger.queue.len() as f64)
            .with_scalar("drones_charging", charging as f64)
            .with_scalar("drones_protecting", protecting as f64)
            .with_scalar("drones_moving", moving as f64)
            .with_scalar("mean_battery", self.mean_battery())
    }

    /// [`World::world_snapshot`] for the current tick plus the deciding
    /// drone's battery; the input of waiting-time estimators.
    pub fn enqueue_snapshot(&self, d: usize) -> Snapshot {
        self.world_snapshot(self.clock)
            .with_scalar("battery", self.drones[d].battery)
    }

    /// Check the policy and all registered estimators against this world
    /// before running: estimator references must resolve, bird tables must
    /// cover the day, and every feature must be readable from the snapshot
    /// its collector will supply.
    pub fn validate_policy(&self, policy: &Policy, set: &EstimatorSet) -> Result<(), WorldError> {
        policy.validate(set.len())?;
        if let Policy::Protection(pp) = policy {
            if let BirdsSource::Table(table) = &pp.birds {
                if table.len() != self.cfg.ticks_per_day as usize {
                    return Err(WorldError::BirdTableLength {
                        expected: self.cfg.ticks_per_day as usize,
                        got: table.len(),
                    });
                }
            }
        }
        let dsnap = self.drone_snapshot(0);
        let wsnap = self.world_snapshot(self.clock);
        let esnap = self.enqueue_snapshot(0);
        for entry in &set.entries {
            let snap = match entry.kind {
                CollectorKind::DronePeriodic | CollectorKind::ChargingDecision => &dsnap,
                CollectorKind::WorldPeriodic => &wsnap,
                CollectorKind::EnqueueWait => &esnap,
            };
            entry
                .handle
                .encode_input(snap, entry.handle.spec.horizon.min)?;
        }
        let probe = |i: usize, snap: &Snapshot| -> Result<(), WorldError> {
            let h = &set.entry(i).handle;
            h.encode_input(snap, h.spec.horizon.min)?;
            Ok(())
        };
        match policy {
            Policy::AlwaysProtect => {}
            Policy::Charging(cp) => {
                if let WaitingSource::Estimator(i) = cp.waiting {
                    probe(i, &esnap)?;
                }
                if let BatterySource::Estimator(i) = cp.battery {
                    probe(i, &dsnap)?;
                }
            }
            Policy::Protection(pp) => {
                if let BirdsSource::Estimator(i) = &pp.birds {
                    probe(*i, &wsnap)?;
                }
            }
        }
        Ok(())
    }

    /// Advance one tick: birds attack and get scared, rules decide, drones
    /// move/drain/charge, the charger releases and grants slots, estimators
    /// observe the new state, and the clock advances.
    pub fn step(&mut self, policy: &Policy, set: &mut EstimatorSet) -> Result<(), WorldError> {
        self.step_birds()?;
        self.apply_policy(policy, set)?;
        self.step_drones(set);
        self.step_charger(set);
        self.record_state();
        let t_next = self.clock + 1;
        if t_next % self.cfg.observation_stride == 0 {
            let drone_snaps: Vec<(EntityId, Snapshot)> = self
                .drones
                .iter()
                .filter(|d| d.mode != DroneMode::Terminated)
                .map(|d| (EntityId(d.id as u32), self.drone_snapshot(d.id)))
                .collect();
            let world_snap = self.world_snapshot(t_next);
            set.observe_periodic(&drone_snaps, &world_snap, t_next, &mut self.est_rng)?;
        }
        set.resolve(&self.history, t_next)?;
        self.clock = t_next;
        Ok(())
    }

    fn step_birds(&mut self) -> Result<(), WorldError> {
        let cfg = &self.cfg;
        let p_attack = attack_probability(
            self.clock % cfg.ticks_per_day,
            cfg.ticks_per_day,
            &cfg.attack,
        )? * cfg.bird_activity;
        let n_cells = self.cells.len();
        let rng = &mut self.rng;
        // Cooldowns tick down; idle birds may start an attack on a uniformly
        // random cell.
        for bird in &mut self.birds {
            match bird.state {
                BirdState::Fleeing(k) => {
                    bird.state = if k <= 1 { BirdState::Idle } else { BirdState::Fleeing(k - 1) };
                }
                BirdState::Idle => {
                    if rng.gen::<f64>() < p_attack {
                        let cell = rng.gen_range(0..n_cells);
                        bird.state = BirdState::Attacking(cell);
                    }
                }
                BirdState::Attacking(_) => {}
            }
        }
        let attacking_now = self
            .birds
            .iter()
            .filter(|b| matches!(b.state, BirdState::Attacking(_)))
            .count();
        // Posted drones scare every attacker within range.
        let scaring: Vec<Vec2> = self
            .drones
            .iter()
            .filter(|d| d.is_scaring())
            .map(|d| d.position)
            .collect();
        let cooldown = cfg.flee_cooldown.max(1);
        let mut detected = 0;
        for bird in &mut self.birds {
            if let BirdState::Attacking(cell) = bird.state {
                let pos = self.cell_centers[cell];
                if scaring.iter().any(|s| s.distance(pos) <= cfg.scare_radius) {
                    bird.state = BirdState::Fleeing(cooldown);
                    detected += 1;
                }
            }
        }
        // Unscared attackers damage their cell and may fly off on their own.
        let cells = &mut self.cells;
        let rng = &mut self.rng;
        for bird in &mut self.birds {
            if let BirdState::Attacking(cell) = bird.state {
                cells[cell] = (cells[cell] - cfg.bird_damage_per_tick).max(0.0);
                if rng.gen::<f64>() < cfg.attack_leave_prob {
                    bird.state = BirdState::Idle;
                }
            }
        }
        self.last_attacking = attacking_now;
        self.last_detected = detected;
        Ok(())
    }

    fn apply_policy(&mut self, policy: &Policy, set: &mut EstimatorSet) -> Result<(), WorldError> {
        for d in 0..self.drones.len() {
            let drone = &self.drones[d];
            if matches!(drone.mode, DroneMode::Terminated | DroneMode::Charging) {
                continue;
            }
            let at_post = matches!(drone.mode, DroneMode::Protecting | DroneMode::Idle);
            if drone.queued {
                // Release rule: fires while the queued drone still holds its
                // post; once flying, the decision is made.
                if at_post && drone.position == drone.hover_point {
                    let fly = self.cfg.time_to_fly(drone.position, self.charger.position);
                    let out = self.eval_release(d, fly);
                    if self.cfg.log_decisions {
                        self.decisions.push(DecisionRecord {
                            tick: self.clock,
                            drone: d,
                            rule: "release",
                            decision: if out.fly { "FLY" } else { "STAY" },
                            threshold: fly as f64,
                            prediction: out.expected_free.saturating_sub(self.clock) as f64,
                        });
                    }
                    if out.fly {
                        self.drones[d].mode = DroneMode::MovingToCharger;
                        if let Some(open) = &mut self.open_trips[d] {
                            open.t_released = Some(self.clock);
                        }
                    }
                }
            } else if at_post {
                match policy {
                    Policy::AlwaysProtect => {}
                    Policy::Charging(cp) => {
                        let (out, waiting_pred) = self.eval_charging(d, cp, set)?;
                        // Track the forecasts that commit a drone to the
                        // queue; the per-tick STAY queries are dominated by
                        // full-battery states the decision never hinges on.
                        if out.enqueue {
                            self.waiting_pred_sum += waiting_pred;
                            self.waiting_pred_count += 1;
                        }
                        if self.cfg.log_decisions {
                            self.decisions.push(DecisionRecord {
                                tick: self.clock,
                                drone: d,
                                rule: "charging",
                                decision: if out.enqueue { "ENQUEUE" } else { "STAY" },
                                threshold: cp.params.safety_threshold,
                                prediction: out.future_battery,
                            });
                        }
                        if out.enqueue {
                            self.enqueue_drone(d, set, Some(out.delta))?;
                        }
                    }
                    Policy::Protection(pp) => {
                        let (out, pred_frac) = self.eval_protection(d, pp, set)?;
                        if self.cfg.log_decisions {
                            self.decisions.push(DecisionRecord {
                                tick: self.clock,
                                drone: d,
                                rule: "protection",
                                decision: if out.enqueue { "ENQUEUE" } else { "STAY" },
                                threshold: out.threshold,
                                prediction: pred_frac,
                            });
                        }
                        if out.enqueue {
                            self.enqueue_drone(d, set, None)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn eval_charging(
        &self,
        d: usize,
        cp: &ChargingPolicy,
        set: &EstimatorSet,
    ) -> Result<(crate::rules::ChargingOutcome, f64), WorldError> {
        let drone = &self.drones[d];
        let fly = self.cfg.time_to_fly(drone.position, self.charger.position);
        let waiting_pred = match cp.waiting {
            WaitingSource::Constant(v) => v,
            WaitingSource::Estimator(i) => {
                let handle = &set.entry(i).handle;
                let snap = self.enqueue_snapshot(d);
                handle
                    .predict(&snap, handle.spec.horizon.min)
                    .map_err(WorldError::from)?
            }
        };
        let horizon_max = match cp.battery {
            BatterySource::Estimator(i) => set.entry(i).handle.spec.horizon.max,
            _ => cp.params.max_horizon,
        };
        let battery_now = drone.battery;
        let dsnap = self.drone_snapshot(d);
        let cfg = &self.cfg;
        let out = charging_decision(waiting_pred, fly, horizon_max, &cp.params, |delta| {
            Ok(match cp.battery {
                BatterySource::LowerBound => {
                    bound_forecast(battery_now, delta, cfg.moving_consumption)
                }
                BatterySource::UpperBound => {
                    bound_forecast(battery_now, delta, cfg.hovering_consumption)
                }
                BatterySource::Constant(v) => v,
                BatterySource::Estimator(i) => {
                    let handle = &set.entry(i).handle;
                    handle.predict(&dsnap, handle.spec.horizon.clamp(delta))?
                }
            })
        })?;
        Ok((out, waiting_pred))
    }

    fn eval_protection(
        &self,
        d: usize,
        pp: &ProtectionPolicy,
        set: &EstimatorSet,
    ) -> Result<(crate::rules::ProtectionOutcome, f64), WorldError> {
        let drone = &self.drones[d];
        let energy = self.cfg.energy_to_fly(drone.position, self.charger.position);
        let population = self.cfg.n_birds.max(1) as f64;
        let current_frac = (self.last_detected as f64 / population).clamp(0.0, 1.0);
        let predicted_raw = match &pp.birds {
            BirdsSource::Constant(v) => *v,
            BirdsSource::Table(table) => {
                table[(self.clock % self.cfg.ticks_per_day) as usize]
            }
            BirdsSource::Estimator(i) => {
                let handle = &set.entry(*i).handle;
                let snap = self.world_snapshot(self.clock);
                handle
                    .predict(&snap, handle.spec.horizon.min)
                    .map_err(WorldError::from)?
            }
        };
        let predicted_frac = (predicted_raw / population).clamp(0.0, 1.0);
        let out = protection_decision(drone.battery, energy, current_frac, predicted_frac, &pp.params);
        Ok((out, predicted_frac))
    }

    fn eval_release(&self, d: usize, fly: u64) -> crate::rules::ReleaseOutcome {
        let rate = self.cfg.charging_rate;
        let occupant_remaining: Vec<u64> = self
            .charger
            .occupants
            .iter()
            .map(|&o| Charger::remaining_charge_ticks(self.drones[o].battery, rate))
            .collect();
        let pos = self.charger.queue_position(d).expect("release rule needs a queued drone");
        let ahead: Vec<QueueMemberInfo> = self
            .charger
            .queue
            .iter()
            .take(pos)
            .map(|&q| {
                let member = &self.drones[q];
                let arrival = if member.position == self.charger.position {
                    Arrival::AtCharger
                } else if member.mode == DroneMode::MovingToCharger {
                    Arrival::AtTick(
                        self.clock
                            + self.cfg.time_to_fly(member.position, self.charger.position),
                    )
                } else {
                    Arrival::WhenSlotFrees
                };
                QueueMemberInfo {
                    arrival,
                    service_ticks: Charger::remaining_charge_ticks(member.battery, rate),
                }
            })
            .collect();
        release_decision(self.clock, fly, self.charger.slots, &occupant_remaining, &ahead)
    }

    fn enqueue_drone(
        &mut self,
        d: usize,
        set: &mut EstimatorSet,
        charging_delta: Option<u64>,
    ) -> Result<(), WorldError> {
        let esnap = self.enqueue_snapshot(d);
        set.note_enqueue(d, &esnap, self.clock)?;
        if let Some(delta) = charging_delta {
            let dsnap = self.drone_snapshot(d);
            set.note_charging_decision(d, &dsnap, self.clock, delta)?;
        }
        self.charger.enqueue(d);
        let battery = self.drones[d].battery;
        self.drones[d].queued = true;
        self.open_trips[d] = Some(OpenTrip {
            t_enqueued: self.clock,
            battery_enqueued: battery,
            t_released: None,
            t_arrived: None,
        });
        Ok(())
    }

    fn step_drones(&mut self, set: &mut EstimatorSet) {
        let charger_pos = self.charger.position;
        for d in 0..self.drones.len() {
            let mut arrived_now = false;
            let died = {
                let cfg = &self.cfg;
                let drone = &mut self.drones[d];
                match drone.mode {
                    DroneMode::Terminated => continue,
                    DroneMode::Charging => {
                        drone.battery = (drone.battery + cfg.charging_rate).min(1.0);
                        continue;
                    }
                    DroneMode::MovingToCharger => {
                        let before = drone.position;
                        drone.position = before.step_toward(charger_pos, cfg.drone_speed);
                        let moved = drone.position != before;
                        if drone.position == charger_pos {
                            arrived_now = true;
                        }
                        drone.drain(if moved {
                            cfg.moving_consumption
                        } else {
                            cfg.hovering_consumption
                        })
                    }
                    DroneMode::Protecting | DroneMode::Idle => {
                        let before = drone.position;
                        drone.position = before.step_toward(drone.hover_point, cfg.drone_speed);
                        let moved = drone.position != before;
                        drone.drain(if moved {
                            cfg.moving_consumption
                        } else {
                            cfg.hovering_consumption
                        })
                    }
                }
            };
            if died {
                self.charger.remove(d);
                set.note_death(d);
                self.open_trips[d] = None;
            } else if arrived_now {
                if let Some(open) = &mut self.open_trips[d] {
                    if open.t_arrived.is_none() {
                        open.t_arrived = Some(self.clock);
                    }
                }
            }
        }
    }

    fn step_charger(&mut self, set: &mut EstimatorSet) {
        // Fully charged occupants release their slots and head back out.
        let mut remaining = Vec::with_capacity(self.charger.occupants.len());
        for &o in &self.charger.occupants {
            if self.drones[o].battery >= 1.0 {
                self.drones[o].mode = DroneMode::Protecting;
            } else {
                remaining.push(o);
            }
        }
        self.charger.occupants = remaining;
        // Freed slots go to arrived drones in strict queue order: the drone
        // behind the head waits until the head has started charging (or
        // died), even if it landed first.
        while self.charger.free_slots() > 0 {
            let Some(&head) = self.charger.queue.front() else { break };
            if self.drones[head].mode == DroneMode::Terminated {
                self.charger.queue.pop_front();
                continue;
            }
            let arrived = self.drones[head].mode == DroneMode::MovingToCharger
                && self.drones[head].position == self.charger.position;
            if !arrived {
                break;
            }
            self.charger.queue.pop_front();
            self.charger.occupants.push(head);
            self.drones[head].mode = DroneMode::Charging;
            self.drones[head].queued = false;
            set.note_charge_start(head, self.clock);
            if let Some(open) = self.open_trips[head].take() {
                self.trips.push(TripRecord {
                    drone: head,
                    t_enqueued: open.t_enqueued,
                    t_released: open.t_released.unwrap_or(open.t_enqueued),
                    t_arrived: open.t_arrived.unwrap_or(self.clock),
                    t_charge_start: self.clock,
                    battery_enqueued: open.battery_enqueued,
                    battery_at_charge_start: self.drones[head].battery,
                });
            }
        }
    }

    fn record_state(&mut self) {
        let records: Vec<DroneRecord> = self
            .drones
            .iter()
            .map(|d| DroneRecord { battery: d.battery, mode: d.mode })
            .collect();
        let (charging, protecting, _moving) = self.mode_counts();
        self.history.push_record(
            &records,
            WorldRecord {
                attacking_birds: self.last_attacking,
                detected_birds: self.last_detected,
                drones_charging: charging,
                drones_protecting: protecting,
                mean_battery: self.mean_battery(),
            },
        );
    }

    fn into_result(self, set: &mut EstimatorSet) -> SimResult {
        let damage_rate = self.damage_rate();
        let survived_drones = self.survived_drones();
        SimResult {
            damage_rate,
            survived_drones,
            n_drones: self.drones.len(),
            seed: self.seed,
            history: self.history,
            datasets: set.take_run_data(),
            trips: self.trips,
            decisions: self.decisions,
            mean_predicted_waiting: if self.waiting_pred_count > 0 {
                Some(self.waiting_pred_sum / self.waiting_pred_count as f64)
            } else {
                None
            },
        }
    }
}

/// Run one full simulation: validate, step `run_length` ticks, close out
/// estimator ledgers and package the result.
pub fn run_simulation(
    cfg: &WorldConfig,
    policy: &Policy,
    set: &mut EstimatorSet,
    seed: u64,
) -> Result<SimResult, WorldError> {
    let mut world = World::new(cfg, seed)?;
    world.validate_policy(policy, set)?;
    for _ in 0..cfg.run_length {
        world.step(policy, set)?;
    }
    set.finish();
    Ok(world.into_result(set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::BackendKind;
    use crate::estimator::{EstimatorHandle, EstimatorSpec, FeatureSpec, HorizonRange, SnapshotLog, ValidityGuard, WORLD_ENTITY};

    fn quiet_cfg() -> WorldConfig {
        WorldConfig { n_birds: 0, run_length: 300, ..WorldConfig::default() }
    }

    #[test]
    fn initial_world_matches_the_construction_contract() {
        let cfg = WorldConfig::default();
        let world = World::new(&cfg, 1).unwrap();
        assert_eq!(world.clock, 0);
        assert!(world.cells.iter().all(|&c| c == 1.0));
        assert!(world
            .birds
            .iter()
            .all(|b| b.state == BirdState::Idle));
        for (i, d) in world.drones.iter().enumerate() {
            assert_eq!(d.id, i);
            assert_eq!(d.battery, 1.0);
            assert_eq!(d.mode, DroneMode::Protecting);
            assert_eq!(d.position, cfg.hover_points[i]);
        }
        assert_eq!(world.history.len(), 1, "initial record is logged");
        let cfg_bad = WorldConfig { n_drones: 13, ..cfg };
        assert!(World::new(&cfg_bad, 1).is_err());
    }

    #[test]
    fn one_hovering_tick_drains_the_hovering_rate() {
        let cfg = quiet_cfg();
        let mut world = World::new(&cfg, 1).unwrap();
        let mut set = EstimatorSet::new();
        world.step(&Policy::AlwaysProtect, &mut set).unwrap();
        assert_eq!(world.clock, 1);
        for d in &world.drones {
            assert!((d.battery - (1.0 - cfg.hovering_consumption)).abs() < 1e-12);
            assert_eq!(d.mode, DroneMode::Protecting);
        }
        let rec = world.history.drone_record(0, 1).unwrap();
        assert!((rec.battery - 0.9975).abs() < 1e-12);
    }

    #[test]
    fn charging_caps_at_full_and_releases_the_same_tick() {
        let cfg = quiet_cfg();
        let mut world = World::new(&cfg, 1).unwrap();
        world.drones[0].mode = DroneMode::Charging;
        world.drones[0].battery = 0.995;
        world.drones[0].position = world.charger.position;
        world.charger.occupants.push(0);
        let mut set = EstimatorSet::new();
        world.step(&Policy::AlwaysProtect, &mut set).unwrap();
        assert_eq!(world.drones[0].battery, 1.0, "charge caps at 1");
        assert_eq!(world.drones[0].mode, DroneMode::Protecting, "slot released same tick");
        assert!(world.charger.occupants.is_empty());
    }

    #[test]
    fn drained_drone_terminates_and_leaves_the_queue() {
        let cfg = quiet_cfg();
        let mut world = World::new(&cfg, 1).unwrap();
        world.drones[0].battery = 0.002;
        world.drones[0].queued = true;
        world.charger.enqueue(0);
        let mut set = EstimatorSet::new();
        world.step(&Policy::AlwaysProtect, &mut set).unwrap();
        assert_eq!(world.drones[0].mode, DroneMode::Terminated);
        assert_eq!(world.drones[0].battery, 0.0);
        assert!(!world.charger.is_queued(0));
        // Terminated is absorbing over further ticks.
        world.step(&Policy::AlwaysProtect, &mut set).unwrap();
        assert_eq!(world.drones[0].mode, DroneMode::Terminated);
        assert_eq!(world.survived_drones(), cfg.n_drones - 1);
    }

    #[test]
    fn without_birds_there_is_no_damage_and_everyone_survives() {
        let cfg = quiet_cfg();
        let mut set = EstimatorSet::new();
        let result =
            run_simulation(&cfg, &Policy::charging_constant(30.0), &mut set, 5).unwrap();
        assert_eq!(result.damage_rate, 0.0);
        assert_eq!(result.survived_drones, cfg.n_drones);
    }

    #[test]
    fn short_runs_cannot_kill_anyone() {
        let cfg = WorldConfig { run_length: 100, ..WorldConfig::default() };
        let mut set = EstimatorSet::new();
        let result = run_simulation(&cfg, &Policy::AlwaysProtect, &mut set, 3).unwrap();
        assert_eq!(result.survived_drones, cfg.n_drones);
        assert!(result.damage_rate >= 0.0);
    }

    #[test]
    fn same_seed_reproduces_the_run_and_other_seeds_diverge() {
        let cfg = WorldConfig { run_length: 400, ..WorldConfig::default() };
        let policy = Policy::charging_constant(30.0);
        let run = |seed: u64| {
            let mut set = EstimatorSet::new();
            run_simulation(&cfg, &policy, &mut set, seed).unwrap()
        };
        let a = run(11);
        let b = run(11);
        assert_eq!(a.damage_rate, b.damage_rate);
        for t in 0..=cfg.run_length {
            assert_eq!(a.history.world_record(t), b.history.world_record(t));
        }
        let c = run(12);
        let series = |r: &SimResult| {
            (0..=cfg.run_length)
                .map(|t| r.history.world_record(t).unwrap().attacking_birds)
                .collect::<Vec<_>>()
        };
        assert_ne!(series(&a), series(&c), "different seeds drive different bird traffic");
    }

    #[test]
    fn attacks_happen_and_damage_is_monotone() {
        let cfg = WorldConfig { run_length: 720, ..WorldConfig::default() };
        let mut world = World::new(&cfg, 2).unwrap();
        let mut set = EstimatorSet::new();
        let policy = Policy::AlwaysProtect;
        let mut last_damage = 0.0;
        let mut seen_attack = false;
        for _ in 0..cfg.run_length {
            world.step(&policy, &mut set).unwrap();
            let damage = world.damage_rate();
            assert!(damage >= last_damage - 1e-15, "damage never decreases");
            last_damage = damage;
            seen_attack |= world.history.world_record(world.clock).unwrap().attacking_birds > 0;
            assert_eq!(world.birds.len(), cfg.n_birds, "bird population is conserved");
        }
        assert!(seen_attack, "two-peak curve must produce attacks by midday");
        assert!(last_damage > 0.0, "coverage holes leak some damage");
    }

    #[test]
    fn strict_fifo_blocks_later_arrivals_until_the_head_lands() {
        let cfg = quiet_cfg();
        let mut world = World::new(&cfg, 1).unwrap();
        // Queue order [1, 2]; drone 2 already landed, drone 1 still at its
        // post and queued.
        for d in [1, 2] {
            world.drones[d].queued = true;
            world.charger.enqueue(d);
        }
        world.drones[2].mode = DroneMode::MovingToCharger;
        world.drones[2].position = world.charger.position;
        // Hold drone 1 at its post artificially by keeping it out of release
        // range: occupy all slots with low-battery drones.
        for (slot, d) in (3..3 + cfg.charger_slots).enumerate() {
            let _ = slot;
            world.drones[d].mode = DroneMode::Charging;
            world.drones[d].battery = 0.1;
            world.drones[d].position = world.charger.position;
            world.charger.occupants.push(d);
        }
        let mut set = EstimatorSet::new();
        world.step(&Policy::AlwaysProtect, &mut set).unwrap();
        assert_eq!(
            world.drones[2].mode,
            DroneMode::MovingToCharger,
            "no free slot yet, everyone waits"
        );
        // Free all slots; the head (drone 1) has not arrived, so drone 2
        // still may not charge.
        for d in 3..3 + cfg.charger_slots {
            world.charger.remove(d);
            world.drones[d].mode = DroneMode::Protecting;
        }
        world.step(&Policy::AlwaysProtect, &mut set).unwrap();
        assert_ne!(world.drones[2].mode, DroneMode::Charging, "strict FIFO");
        // Land the head: both may now charge, head first.
        world.drones[1].mode = DroneMode::MovingToCharger;
        world.drones[1].position = world.charger.position;
        world.step(&Policy::AlwaysProtect, &mut set).unwrap();
        assert_eq!(world.drones[1].mode, DroneMode::Charging);
        assert_eq!(world.drones[2].mode, DroneMode::Charging);
        assert_eq!(world.charger.occupants, vec![1, 2], "granted in queue order");
    }

    #[test]
    fn charging_policy_produces_complete_ordered_trips() {
        // One slot per drone keeps the run death-free regardless of how far
        // off the constant waiting forecast is.
        let cfg = WorldConfig {
            run_length: 1000,
            n_birds: 0,
            charger_slots: 12,
            ..WorldConfig::default()
        };
        let mut set = EstimatorSet::new();
        let result =
            run_simulation(&cfg, &Policy::charging_constant(20.0), &mut set, 7).unwrap();
        assert!(!result.trips.is_empty(), "a 1000-tick run forces charge trips");
        for trip in &result.trips {
            assert!(trip.t_enqueued < trip.t_released);
            assert!(trip.t_released < trip.t_arrived);
            assert!(trip.t_arrived <= trip.t_charge_start);
            assert!(trip.battery_enqueued > trip.battery_at_charge_start);
            assert!(trip.waiting_time() >= 1);
        }
        assert_eq!(result.survived_drones, cfg.n_drones);
    }

    #[test]
    fn mode_transitions_along_a_run_follow_the_automaton() {
        let cfg = WorldConfig { run_length: 1200, ..WorldConfig::default() };
        let mut set = EstimatorSet::new();
        let result =
            run_simulation(&cfg, &Policy::charging_constant(10.0), &mut set, 4).unwrap();
        for d in 0..cfg.n_drones {
            for t in 1..=cfg.run_length {
                let prev = result.history.drone_record(d, t - 1).unwrap();
                let next = result.history.drone_record(d, t).unwrap();
                assert!(
                    DroneMode::transition_allowed(prev.mode, next.mode),
                    "drone {d} at tick {t}: {:?} -> {:?}",
                    prev.mode,
                    next.mode
                );
                match prev.mode {
                    DroneMode::Charging => assert!(next.battery >= prev.battery),
                    DroneMode::Terminated => assert_eq!(next.battery, 0.0),
                    _ => assert!(next.battery <= prev.battery),
                }
                assert!((0.0..=1.0).contains(&next.battery));
            }
        }
    }

    #[test]
    fn waiting_time_dataset_matches_the_recorded_trips() {
        let spec = EstimatorSpec {
            id: "waiting".into(),
            inputs: vec![
                FeatureSpec::scalar("battery", "battery"),
                FeatureSpec::scalar_min_max("queue_length", "queue_length", 0.0, 12.0),
            ],
            output: FeatureSpec::scalar("battery", "battery"),
            horizon: HorizonRange::new(1, 1),
            guard: ValidityGuard::AlwaysValid,
            backend: BackendKind::Constant { value: 0.0 },
            bootstrap_value: 0.0,
        };
        let mut set = EstimatorSet::new();
        set.register(EstimatorHandle::new(spec).unwrap(), CollectorKind::EnqueueWait);
        let cfg = WorldConfig { run_length: 1000, n_birds: 0, ..WorldConfig::default() };
        let result =
            run_simulation(&cfg, &Policy::charging_constant(20.0), &mut set, 9).unwrap();
        let data = result.dataset("waiting").unwrap();
        assert_eq!(data.samples.len(), result.trips.len());
        for (sample, trip) in data.samples.iter().zip(&result.trips) {
            assert_eq!(sample.t_observed, trip.t_enqueued);
            assert_eq!(sample.t_resolved, trip.t_charge_start);
            assert_eq!(sample.label, trip.waiting_time() as f64);
            assert_eq!(sample.input[0], trip.battery_enqueued);
        }
    }

    #[test]
    fn periodic_battery_samples_resolve_labels_from_the_log() {
        let spec = EstimatorSpec {
            id: "future_battery".into(),
            inputs: vec![
                FeatureSpec::scalar("battery", "battery"),
                FeatureSpec::one_hot("mode", "mode", DroneMode::alphabet()),
            ],
            output: FeatureSpec::scalar("battery", "battery"),
            horizon: HorizonRange::new(1, 50),
            guard: ValidityGuard::mode_never("CHARGING"),
            backend: BackendKind::Constant { value: 0.5 },
            bootstrap_value: 0.5,
        };
        let mut set = EstimatorSet::new();
        set.register(EstimatorHandle::new(spec).unwrap(), CollectorKind::DronePeriodic);
        let cfg = WorldConfig {
            run_length: 900,
            n_birds: 0,
            observation_stride: 30,
            charger_slots: 12,
            ..WorldConfig::default()
        };
        let result =
            run_simulation(&cfg, &Policy::charging_constant(20.0), &mut set, 9).unwrap();
        let data = result.dataset("future_battery").unwrap();
        assert!(!data.samples.is_empty());
        for sample in &data.samples {
            assert_eq!(sample.input.len(), 7, "battery + 5 mode flags + horizon fraction");
            // Labels must agree with the logged battery at resolution time
            // for whichever drone matches this sample's observed battery.
            assert!((0.0..=1.0).contains(&sample.label));
        }
        assert!(
            data.discards.guard_failed > 0,
            "900 congested ticks include charging windows"
        );
        let total = data.samples.len() as u64 + data.discards.total();
        let expected_observations: u64 = (1..=cfg.run_length)
            .filter(|t| t % cfg.observation_stride == 0)
            .map(|_| cfg.n_drones as u64)
            .sum();
        assert_eq!(total, expected_observations, "ledger conservation");
    }

    #[test]
    fn world_series_features_match_live_snapshots() {
        let cfg = WorldConfig { run_length: 50, ..WorldConfig::default() };
        let mut world = World::new(&cfg, 8).unwrap();
        let mut set = EstimatorSet::new();
        for _ in 0..cfg.run_length {
            world.step(&Policy::AlwaysProtect, &mut set).unwrap();
            let t = world.clock;
            let snap = world.world_snapshot(t);
            let from_log = |f: &str| world.history.scalar_at(WORLD_ENTITY, t, f).unwrap();
            for field in ["detected_birds", "attacking_birds", "tod_sin", "tod_cos"] {
                let live = crate::estimator::Observable::scalar(&snap, field).unwrap();
                assert!(
                    (live - from_log(field)).abs() < 1e-12,
                    "{field} diverges at tick {t}"
                );
            }
        }
    }

    #[test]
    fn decision_logging_records_rule_evaluations() {
        let cfg = WorldConfig {
            run_length: 300,
            n_birds: 0,
            log_decisions: true,
            ..WorldConfig::default()
        };
        let mut set = EstimatorSet::new();
        let result =
            run_simulation(&cfg, &Policy::charging_constant(20.0), &mut set, 3).unwrap();
        assert!(!result.decisions.is_empty());
        assert!(result.decisions.iter().all(|d| d.rule == "charging" || d.rule == "release"));
        let mut last_tick = 0;
        for d in &result.decisions {
            assert!(d.tick >= last_tick, "decisions are recorded in tick order");
            last_tick = d.tick;
        }
        assert!(result.mean_predicted_waiting.is_some());
        assert!((result.mean_predicted_waiting.unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn unresolved_estimator_references_fail_validation() {
        let cfg = quiet_cfg();
        let world = World::new(&cfg, 1).unwrap();
        let set = EstimatorSet::new();
        let policy = Policy::Charging(ChargingPolicy {
            params: Default::default(),
            waiting: WaitingSource::Estimator(0),
            battery: BatterySource::LowerBound,
        });
        assert!(world.validate_policy(&policy, &set).is_err());
        let policy = Policy::Protection(ProtectionPolicy {
            params: Default::default(),
            birds: BirdsSource::Table(vec![0.0; 10]),
        });
        assert!(matches!(
            world.validate_policy(&policy, &set),
            Err(WorldError::BirdTableLength { .. })
        ));
    }
}
