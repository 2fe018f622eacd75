//! Brute-force k-nearest-neighbour regression.
//!
//! The model simply stores its training set; a prediction is the mean label
//! of the `k` stored points closest to the query in Euclidean distance.  With
//! the small datasets produced by one day of simulation the exhaustive scan
//! is more than fast enough and has no tuning knobs that could drift.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{BackendError, DataPoint, Regressor};

/// k-nearest-neighbour regressor over an explicit stored dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    input_dim: usize,
    pub k: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

/// Heap entry ordered worst-first: larger distance is "greater", and at equal
/// distance the higher index is "greater", so popping always evicts the
/// candidate that the lowest-index tie-breaking rule would discard.
#[derive(PartialEq)]
struct Neighbor {
    dist_sq: f64,
    index: usize,
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KnnModel {
    /// New empty model for `input_dim`-dimensional features.
    pub fn new(input_dim: usize, k: usize) -> Result<Self, BackendError> {
        if k == 0 {
            return Err(BackendError::InvalidK);
        }
        if input_dim == 0 {
            return Err(BackendError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self {
            input_dim,
            k,
            points: Vec::new(),
            labels: Vec::new(),
        })
    }

    /// Replace the stored training set.
    pub fn set_data(&mut self, data: &[DataPoint]) -> Result<(), BackendError> {
        if data.is_empty() {
            return Err(BackendError::EmptyData);
        }
        for p in data {
            if p.x.len() != self.input_dim {
                return Err(BackendError::DimensionMismatch {
                    expected: self.input_dim,
                    got: p.x.len(),
                });
            }
        }
        self.points = data.iter().map(|p| p.x.clone()).collect();
        self.labels = data.iter().map(|p| p.y).collect();
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Number of stored training points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of the `k` nearest stored points (all of them if fewer than
    /// `k` are stored), in ascending (distance, index) order.
    pub fn nearest(&self, x: &[f64]) -> Result<Vec<usize>, BackendError> {
        if x.len() != self.input_dim {
            return Err(BackendError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        if self.points.is_empty() {
            return Err(BackendError::EmptyModel);
        }
        let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(self.k + 1);
        for (index, p) in self.points.iter().enumerate() {
            let dist_sq: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            heap.push(Neighbor { dist_sq, index });
            if heap.len() > self.k {
                heap.pop();
            }
        }
        let mut picked: Vec<Neighbor> = heap.into_vec();
        picked.sort_by(|a, b| a.cmp(b));
        Ok(picked.into_iter().map(|n| n.index).collect())
    }
}

impl Regressor for KnnModel {
    fn predict(&self, x: &[f64]) -> Result<f64, BackendError> {
        let nearest = self.nearest(x)?;
        let sum: f64 = nearest.iter().map(|&i| self.labels[i]).sum();
        Ok(sum / nearest.len() as f64)
    }
}
