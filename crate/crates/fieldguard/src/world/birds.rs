//! Bird population model and the daily attack-intensity curve.

use serde::{Deserialize, Serialize};

use super::config::{AttackParams, WorldError};

/// Behavioural state of one bird.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BirdState {
    /// Away from the field, may start an attack.
    Idle,
    /// Feeding on the crop cell with this index.
    Attacking(usize),
    /// Scared off; idle again once the cooldown reaches 0.
    Fleeing(u64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bird {
    pub id: usize,
    pub state: BirdState,
}

impl Bird {
    pub fn new(id: usize) -> Self {
        Self { id, state: BirdState::Idle }
    }
}

/// Attack intensity for a tick of the day, in `[0, 1]`.
///
/// Sum of two Gaussian bumps (see [`AttackParams`]), clamped to `[0, 1]`.
/// `t` must satisfy `0 ≤ t < ticks_per_day`.
pub fn attack_probability(
    t: u64,
    ticks_per_day: u64,
    params: &AttackParams,
) -> Result<f64, WorldError> {
    if t >= ticks_per_day {
        return Err(WorldError::TickOutOfDay { t, ticks_per_day });
    }
    let tf = t as f64;
    let bump = |peak: f64, amp: f64, sigma: f64| {
        amp * (-(tf - peak).powi(2) / (2.0 * sigma * sigma)).exp()
    };
    let p = bump(params.peak1_tick, params.peak1_amp, params.peak1_sigma)
        + bump(params.peak2_tick, params.peak2_amp, params.peak2_sigma);
    Ok(p.clamp(0.0, 1.0))
}
