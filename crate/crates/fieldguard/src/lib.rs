//! Deterministic crop-protection drone simulator with online-learned
//! estimators and an experiment harness.
//!
//! A flock of birds raids a crop field over the course of a day; a fleet of
//! battery-powered drones hovers over the field and scares birds away.  Drones
//! must periodically visit a shared multi-slot charger, and the interesting
//! question is *when* each drone should give up its post and fly off to
//! charge.  The crate provides:
//!
//! * [`world`] — the tick-based simulation itself: field, birds, drones,
//!   charger queue.  Fully deterministic for a given seed.
//! * [`backends`] — small regression backends trained online from simulation
//!   traces: a constant baseline, a multi-layer perceptron and a k-nearest
//!   neighbour model, plus a sliding replay buffer and evaluation helpers.
//! * [`estimator`] — the estimator framework gluing backends to the world:
//!   declarative feature specs, delayed-label bookkeeping and validity
//!   guards that discard samples invalidated by intervening events.
//! * [`rules`] — the adaptation rules that consume estimator predictions:
//!   a charging-safety rule, a queue-release rule and a bird-pressure
//!   protection rule, plus domain-expert battery bounds.
//! * [`harness`] — experiment orchestration: the iterative
//!   simulate/train/deploy loop, grid searches over rule parameters,
//!   Pareto-front extraction and all file formats (TOML config, CSV series
//!   and datasets, JSON metrics).

pub mod backends;
pub mod estimator;
pub mod harness;
pub mod rng;
pub mod rules;
pub mod world;
