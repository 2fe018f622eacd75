//! Validity guards over observation→label intervals.
//!
//! A training sample is only as good as the interval it spans: if a
//! disqualifying event (for the battery estimator, a charging session) falls
//! between the moment the inputs were read and the moment the label is read,
//! the pair teaches the model a relationship that never held.  Guards are
//! pure predicates over the logged snapshot sequence in `(t_observed,
//! t_resolved]` and are checked when a pending sample matures.

use serde::{Deserialize, Serialize};

use super::{EntityId, EstimatorError, SnapshotLog};

/// Predicate deciding whether an observation→label interval is adequate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidityGuard {
    /// Accept every interval.
    AlwaysValid,
    /// Reject the interval if the entity's symbolic `field` ever equals
    /// `value` at any tick in `(t_observed, t_resolved]`.
    ModeNever { field: String, value: String },
}

impl ValidityGuard {
    /// The common case: the entity's `mode` must never be `value`.
    pub fn mode_never(value: impl Into<String>) -> Self {
        ValidityGuard::ModeNever {
            field: "mode".to_string(),
            value: value.into(),
        }
    }

    /// Evaluate the guard over `(t_observed, t_resolved]` against the log.
    ///
    /// Errors if the log lacks a snapshot for any tick in the interval; a
    /// guard must never silently pass on missing evidence.
    pub fn holds(
        &self,
        log: &dyn SnapshotLog,
        entity: EntityId,
        t_observed: u64,
        t_resolved: u64,
    ) -> Result<bool, EstimatorError> {
        match self {
            ValidityGuard::AlwaysValid => Ok(true),
            ValidityGuard::ModeNever { field, value } => {
                for t in (t_observed + 1)..=t_resolved {
                    let sym = log
                        .symbol_at(entity, t, field)
                        .ok_or(EstimatorError::MissingHistory { entity, t })?;
                    if sym == value {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}
