//! Tick-indexed history of a run: per-drone battery/mode traces and
//! aggregate world statistics, readable through [`SnapshotLog`] for label
//! extraction and guard replay.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::drone::DroneMode;
use crate::estimator::{EntityId, SnapshotLog, WORLD_ENTITY};

/// State of one drone at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneRecord {
    pub battery: f64,
    pub mode: DroneMode,
}

/// Aggregate world state at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldRecord {
    /// Birds feeding on the field during the step that led to this tick.
    pub attacking_birds: usize,
    /// Birds scared off by drones during that step.
    pub detected_birds: usize,
    pub drones_charging: usize,
    pub drones_protecting: usize,
    pub mean_battery: f64,
}

/// Complete per-tick history of one run.
///
/// Record `t` describes the state at clock value `t`; record 0 is the initial
/// state.  Scalar fields addressable through [`SnapshotLog`]:
/// for drones `battery` (and symbol `mode`), for the world entity
/// `attacking_birds`, `detected_birds`, `drones_charging`,
/// `drones_protecting`, `mean_battery`, `time_of_day`, `tod_sin`, `tod_cos`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryLog {
    ticks_per_day: u64,
    /// `drones[id][t]`
    drones: Vec<Vec<DroneRecord>>,
    /// `world[t]`
    world: Vec<WorldRecord>,
}

impl HistoryLog {
    pub fn new(n_drones: usize, ticks_per_day: u64) -> Self {
        Self {
            ticks_per_day,
            drones: vec![Vec::new(); n_drones],
            world: Vec::new(),
        }
    }

    pub fn n_drones(&self) -> usize {
        self.drones.len()
    }

    /// Number of records; record indices are `0..len()`.
    pub fn len(&self) -> usize {
        self.world.len()
    }

    pub fn is_empty(&self) -> bool {
        self.world.is_empty()
    }

    pub fn ticks_per_day(&self) -> u64 {
        self.ticks_per_day
    }

    /// Append the record for the next tick.  `drones` must hold one record
    /// per drone, in id order.
    pub fn push_record(&mut self, drones: &[DroneRecord], world: WorldRecord) {
        assert_eq!(drones.len(), self.drones.len(), "one record per drone");
        for (trace, rec) in self.drones.iter_mut().zip(drones) {
            trace.push(*rec);
        }
        self.world.push(world);
    }

    pub fn drone_record(&self, id: usize, t: u64) -> Option<DroneRecord> {
        self.drones.get(id)?.get(t as usize).copied()
    }

    pub fn world_record(&self, t: u64) -> Option<WorldRecord> {
        self.world.get(t as usize).copied()
    }

    fn tick_of_day(&self, t: u64) -> f64 {
        (t % self.ticks_per_day) as f64
    }

    /// Write the aggregate series as CSV with the columns
    /// `tick,attacking_birds,detected_birds,drones_charging,drones_protecting,mean_battery`.
    pub fn write_timeseries_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(
            out,
            "tick,attacking_birds,detected_birds,drones_charging,drones_protecting,mean_battery"
        )?;
        for (t, rec) in self.world.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t,
                rec.attacking_birds,
                rec.detected_birds,
                rec.drones_charging,
                rec.drones_protecting,
                rec.mean_battery
            )?;
        }
        out.flush()
    }
}

impl SnapshotLog for HistoryLog {
    fn scalar_at(&self, entity: EntityId, t: u64, field: &str) -> Option<f64> {
        if entity == WORLD_ENTITY {
            let phase = self.tick_of_day(t) / self.ticks_per_day as f64;
            match field {
                "time_of_day" => return Some(self.tick_of_day(t)),
                "tod_sin" => return Some((TAU * phase).sin()),
                "tod_cos" => return Some((TAU * phase).cos()),
                _ => {}
            }
            let rec = self.world_record(t)?;
            match field {
                "attacking_birds" => Some(rec.attacking_birds as f64),
                "detected_birds" => Some(rec.detected_birds as f64),
                "drones_charging" => Some(rec.drones_charging as f64),
                "drones_protecting" => Some(rec.drones_protecting as f64),
                "mean_battery" => Some(rec.mean_battery),
                _ => None,
            }
        } else {
            let rec = self.drone_record(entity.0 as usize, t)?;
            match field {
                "battery" => Some(rec.battery),
                _ => None,
            }
        }
    }

    fn symbol_at(&self, entity: EntityId, t: u64, field: &str) -> Option<&str> {
        if entity == WORLD_ENTITY {
            return None;
        }
        let rec = self.drone_record(entity.0 as usize, t)?;
        match field {
            "mode" => Some(rec.mode.as_str()),
            _ => None,
        }
    }
}
