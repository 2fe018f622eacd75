//! Pareto-front extraction over (damage to minimize, survivors to maximize)
//! and seed aggregation helpers.

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// One evaluated parameter point: crop damage is minimized, surviving drones
/// are maximized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityPoint {
    pub damage: f64,
    pub survived: f64,
}

impl UtilityPoint {
    pub fn new(damage: f64, survived: f64) -> Self {
        Self { damage, survived }
    }

    /// True when `self` Pareto-dominates `other`: at least as good in both
    /// metrics and strictly better in one.
    pub fn dominates(&self, other: &UtilityPoint) -> bool {
        self.damage <= other.damage
            && self.survived >= other.survived
            && (self.damage < other.damage || self.survived > other.survived)
    }
}

/// Per-point front membership: `flags[i]` is true iff no other point
/// dominates point `i`.  Duplicates of a front point are all kept.
pub fn pareto_flags(points: &[UtilityPoint]) -> Vec<bool> {
    let n = points.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .damage
            .total_cmp(&points[b].damage)
            .then(points[b].survived.total_cmp(&points[a].survived))
            .then(a.cmp(&b))
    });
    let mut flags = vec![false; n];
    // Highest survivor count among points with strictly smaller damage.
    let mut best_before = f64::NEG_INFINITY;
    let mut start = 0;
    while start < n {
        let damage = points[order[start]].damage;
        let mut end = start;
        while end < n && points[order[end]].damage.total_cmp(&damage).is_eq() {
            end += 1;
        }
        // Sorted descending within the group, so the first is the maximum.
        let group_best = points[order[start]].survived;
        for &i in &order[start..end] {
            flags[i] = points[i].survived == group_best && group_best > best_before;
        }
        best_before = best_before.max(group_best);
        start = end;
    }
    flags
}

/// Indices of the non-dominated points, ascending.  Errors on an empty set:
/// there is no front to speak of.
pub fn pareto_front(points: &[UtilityPoint]) -> Result<Vec<usize>, HarnessError> {
    if points.is_empty() {
        return Err(HarnessError::EmptyPoints);
    }
    Ok(pareto_flags(points)
        .iter()
        .enumerate()
        .filter_map(|(i, &on)| on.then_some(i))
        .collect())
}

/// Sample mean and sample standard deviation (the n−1 form, 0 for a single
/// value).
pub fn aggregate(values: &[f64]) -> (f64, f64) {
    assert!(!values.is_empty(), "aggregate needs at least one value");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
