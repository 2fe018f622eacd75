//! Drone state and the mode automaton.

use serde::{Deserialize, Serialize};

use super::config::Vec2;

/// Activity mode of a drone.
///
/// Allowed transitions: `Protecting`/`Idle` ↔ `MovingToCharger`,
/// `MovingToCharger` → `Charging`, `Charging` → `Protecting`, and any mode →
/// `Terminated`.  `Terminated` is absorbing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DroneMode {
    Idle,
    Protecting,
    MovingToCharger,
    Charging,
    Terminated,
}

impl DroneMode {
    /// Canonical symbol used in logs, CSV columns and one-hot encodings.
    pub fn as_str(&self) -> &'static str {
        match self {
            DroneMode::Idle => "IDLE",
            DroneMode::Protecting => "PROTECTING",
            DroneMode::MovingToCharger => "MOVING_TO_CHARGER",
            DroneMode::Charging => "CHARGING",
            DroneMode::Terminated => "TERMINATED",
        }
    }

    /// All modes, in the fixed order used for one-hot features.
    pub fn alphabet() -> Vec<String> {
        [
            DroneMode::Idle,
            DroneMode::Protecting,
            DroneMode::MovingToCharger,
            DroneMode::Charging,
            DroneMode::Terminated,
        ]
        .iter()
        .map(|m| m.as_str().to_owned())
        .collect()
    }

    /// Whether the automaton allows `from` → `to` (self-loops always hold).
    pub fn transition_allowed(from: DroneMode, to: DroneMode) -> bool {
        use DroneMode::*;
        if from == to || to == Terminated {
            return true;
        }
        matches!(
            (from, to),
            (Protecting | Idle, MovingToCharger)
                | (MovingToCharger, Protecting | Idle)
                | (MovingToCharger, Charging)
                | (Charging, Protecting)
        )
    }
}

/// One field-protection drone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Drone {
    pub id: usize,
    pub position: Vec2,
    /// Charge level in `[0, 1]`; 0 means terminated.
    pub battery: f64,
    pub mode: DroneMode,
    /// Set while the drone is in the charger queue (still protecting or
    /// already travelling); cleared when charging starts or the drone dies.
    pub queued: bool,
    /// Assigned protection position.
    pub hover_point: Vec2,
}

impl Drone {
    pub fn new(id: usize, hover_point: Vec2) -> Self {
        Self {
            id,
            position: hover_point,
            battery: 1.0,
            mode: DroneMode::Protecting,
            queued: false,
            hover_point,
        }
    }

    /// A drone scares birds only while stationed at its hover point in a
    /// protection mode — not while travelling, queuing at the charger,
    /// charging, or dead.
    pub fn is_scaring(&self) -> bool {
        matches!(self.mode, DroneMode::Protecting | DroneMode::Idle)
            && self.position == self.hover_point
    }

    /// Drain `amount` from the battery; at 0 the drone terminates.
    /// Returns `true` if the drone just died.
    pub fn drain(&mut self, amount: f64) -> bool {
        if self.mode == DroneMode::Terminated {
            return false;
        }
        self.battery = (self.battery - amount).max(0.0);
        if self.battery == 0.0 {
            self.mode = DroneMode::Terminated;
            self.queued = false;
            true
        } else {
            false
        }
    }
}
