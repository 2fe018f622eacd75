//! Shared charging station: slot pool, strict-FIFO queue, and the
//! slot-availability forecast used by the release rule.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::config::Vec2;

/// Charging station with a fixed number of slots and a FIFO waiting queue.
///
/// The queue holds drone ids in enqueue order; a drone stays in the queue
/// from the moment the charging rule enqueues it (possibly while still
/// protecting its post) until it starts charging or terminates.  Slots are
/// granted strictly in queue order: the drone behind the head never starts
/// charging before the head does.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Charger {
    pub position: Vec2,
    pub slots: usize,
    /// Drone ids currently charging; `occupants.len() <= slots`.
    pub occupants: Vec<usize>,
    /// Drone ids waiting for a slot, oldest first.
    pub queue: VecDeque<usize>,
}

impl Charger {
    pub fn new(position: Vec2, slots: usize) -> Self {
        Self {
            position,
            slots,
            occupants: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    pub fn free_slots(&self) -> usize {
        self.slots - self.occupants.len()
    }

    pub fn is_queued(&self, id: usize) -> bool {
        self.queue.contains(&id)
    }

    pub fn enqueue(&mut self, id: usize) {
        debug_assert!(!self.is_queued(id) && !self.occupants.contains(&id));
        self.queue.push_back(id);
    }

    /// Queue position of `id` (0 = head), if queued.
    pub fn queue_position(&self, id: usize) -> Option<usize> {
        self.queue.iter().position(|&q| q == id)
    }

    /// Drop `id` from queue and slots (used when a drone terminates).
    pub fn remove(&mut self, id: usize) {
        self.queue.retain(|&q| q != id);
        self.occupants.retain(|&o| o != id);
    }

    /// Ticks a battery at `battery` still needs in a slot at `rate` per tick.
    pub fn remaining_charge_ticks(battery: f64, rate: f64) -> u64 {
        debug_assert!(rate > 0.0);
        let missing = (1.0 - battery).max(0.0);
        (missing / rate).ceil() as u64
    }
}

/// When a queued-but-not-yet-released drone is expected to reach the charger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrival {
    /// Already waiting at the charger.
    AtCharger,
    /// In flight; lands at this tick.
    AtTick(u64),
    /// Still at its post; assumed to time its flight so it lands exactly when
    /// its slot frees (that timing is what the release rule optimises).
    WhenSlotFrees,
}

/// Forecast inputs for one queue member ahead of the asking drone.
#[derive(Debug, Clone, Copy)]
pub struct QueueMemberInfo {
    pub arrival: Arrival,
    /// Expected slot time once charging starts.
    pub service_ticks: u64,
}

/// Earliest tick at which a slot is expected to free up for the drone right
/// behind `ahead` in the queue.
///
/// Simulates the slot pool forward: current occupants release their slots
/// after their remaining charge time, then each queue member ahead claims the
/// earliest slot (no earlier than its arrival) and holds it for its service
/// time.  Because slots are granted strictly in queue order, no member — nor
/// the asking drone — can start before everyone ahead of it has started.
pub fn expected_slot_free_tick(
    now: u64,
    slots: usize,
    occupant_remaining: &[u64],
    ahead: &[QueueMemberInfo],
) -> u64 {
    debug_assert!(slots >= 1);
    debug_assert!(occupant_remaining.len() <= slots);
    let mut free_at: BinaryHeap<Reverse<u64>> = occupant_remaining
        .iter()
        .map(|&r| Reverse(now + r))
        .collect();
    for _ in occupant_remaining.len()..slots {
        free_at.push(Reverse(now));
    }
    let mut last_start = now;
    for member in ahead {
        let Reverse(slot_free) = free_at.pop().expect("slots >= 1");
        let start = match member.arrival {
            Arrival::AtCharger => slot_free.max(now),
            Arrival::AtTick(t) => slot_free.max(t),
            Arrival::WhenSlotFrees => slot_free,
        }
        .max(last_start);
        last_start = start;
        free_at.push(Reverse(start + member.service_ticks));
    }
    let Reverse(next) = free_at.pop().expect("slots >= 1");
    next.max(last_start)
}
