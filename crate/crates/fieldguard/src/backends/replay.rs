//! Sliding window over recent training batches.
//!
//! Online training collects one batch of samples per experiment iteration.
//! Refitting on only the newest batch makes the model chase its own
//! behaviour (each policy change reshapes the data it will see next);
//! refitting on everything ever collected makes it sluggish.  The replay
//! buffer keeps the last `window` batches and trains on their union.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Ordered list of the most recent sample batches, capped at `window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer<T> {
    batches: VecDeque<Vec<T>>,
    window: usize,
}

impl<T: Clone> ReplayBuffer<T> {
    /// Buffer keeping the last `window` batches; `window` is clamped to at
    /// least 1 (a windowless buffer would silently train on nothing).
    pub fn new(window: usize) -> Self {
        Self {
            batches: VecDeque::new(),
            window: window.max(1),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Append one batch, evicting the oldest batch beyond the window.
    pub fn push_batch(&mut self, batch: Vec<T>) {
        self.batches.push_back(batch);
        while self.batches.len() > self.window {
            self.batches.pop_front();
        }
    }

    /// Number of retained batches (at most `window`).
    pub fn n_batches(&self) -> usize {
        self.batches.len()
    }

    /// Total samples across retained batches.
    pub fn n_samples(&self) -> usize {
        self.batches.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples() == 0
    }

    /// Union of the retained batches, oldest batch first, preserving order
    /// within each batch.
    pub fn training_set(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_samples());
        for batch in &self.batches {
            out.extend(batch.iter().cloned());
        }
        out
    }

    /// Forget all batches, keeping the window size.
    pub fn clear(&mut self) {
        self.batches.clear();
    }
}
