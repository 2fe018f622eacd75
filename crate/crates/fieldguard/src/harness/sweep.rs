//! Grid searches over rule parameters: every (point, seed) pair is an
//! independent simulation job run under a parallel map; rows are assembled
//! in grid order and aggregated over seeds, with Pareto flags on the means.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::rules::{
    BatterySource, BirdsSource, ChargingPolicy, ChargingRuleParams, Policy, ProtectionPolicy,
    ProtectionRuleParams, WaitingSource,
};
use crate::world::{run_simulation, time_of_day_snapshot, EstimatorSet, WorldConfig};

use super::config::{BatteryBound, ExperimentConfig};
use super::pareto::{aggregate, pareto_flags, UtilityPoint};
use super::training::iterative_training;
use super::HarnessError;

/// One grid point with its per-seed and seed-aggregated utilities.
#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Parameter values of this grid point, in declaration order.
    pub params: Vec<f64>,
    /// (damage rate, survived drones) per seed, in seed order.
    pub per_seed: Vec<(f64, f64)>,
    pub mean_damage: f64,
    pub sd_damage: f64,
    pub mean_survived: f64,
    pub sd_survived: f64,
    /// True when no other row Pareto-dominates this row's means.
    pub pareto: bool,
}

/// A finished grid search: one row per grid point, in grid order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Number of parameters per point (CSV columns `param_1..param_k`).
    pub n_params: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Assemble rows from point-major metric pairs and flag the front.
    fn assemble(
        n_params: usize,
        seeds: &[u64],
        points: Vec<Vec<f64>>,
        metrics: &[(f64, f64)],
    ) -> Self {
        let per_point = seeds.len();
        let mut rows: Vec<SweepRow> = points
            .into_iter()
            .enumerate()
            .map(|(i, params)| {
                let per_seed = metrics[i * per_point..(i + 1) * per_point].to_vec();
                let damages: Vec<f64> = per_seed.iter().map(|m| m.0).collect();
                let survives: Vec<f64> = per_seed.iter().map(|m| m.1).collect();
                let (mean_damage, sd_damage) = aggregate(&damages);
                let (mean_survived, sd_survived) = aggregate(&survives);
                SweepRow {
                    params,
                    per_seed,
                    mean_damage,
                    sd_damage,
                    mean_survived,
                    sd_survived,
                    pareto: false,
                }
            })
            .collect();
        let points: Vec<UtilityPoint> = rows
            .iter()
            .map(|r| UtilityPoint::new(r.mean_damage, r.mean_survived))
            .collect();
        for (row, flag) in rows.iter_mut().zip(pareto_flags(&points)) {
            row.pareto = flag;
        }
        Self { n_params, seeds: seeds.to_vec(), rows }
    }

    /// The row whose mean damage is lowest; ties go to the earlier grid
    /// point.
    pub fn best_by_damage(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .min_by(|a, b| a.mean_damage.total_cmp(&b.mean_damage))
    }

    /// Write `param_1,...,param_k,mean_damage,sd_damage,mean_survived,`
    /// `sd_survived,pareto` with one row per grid point.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = Vec::new();
        for i in 0..self.n_params {
            write!(out, "param_{},", i + 1)?;
        }
        writeln!(out, "mean_damage,sd_damage,mean_survived,sd_survived,pareto")?;
        for row in &self.rows {
            for p in &row.params {
                write!(out, "{p},")?;
            }
            writeln!(
                out,
                "{},{},{},{},{}",
                row.mean_damage,
                row.sd_damage,
                row.mean_survived,
                row.sd_survived,
                u8::from(row.pareto)
            )?;
        }
        std::fs::write(path, out)
    }
}

/// Run one estimator-free simulation and report (damage, survived).
fn run_job(world: &WorldConfig, policy: &Policy, seed: u64) -> Result<(f64, f64), HarnessError> {
    let mut set = EstimatorSet::new();
    let result = run_simulation(world, policy, &mut set, seed)?;
    Ok((result.damage_rate, result.survived_drones as f64))
}

/// Evaluate the charging scenario once per (waiting constant, seed).
///
/// Each job runs the charging rule with the constant as its waiting-time
/// forecast and the configured battery bound (or constant); a configured
/// battery estimator is ignored here, since the baseline family is defined
/// without learned models.
pub fn grid_search_constant(
    cfg: &ExperimentConfig,
    values: &[f64],
    seeds: &[u64],
) -> Result<SweepResult, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::config("sweep needs at least one constant value"));
    }
    if seeds.is_empty() {
        return Err(HarnessError::config("sweep needs at least one seed"));
    }
    let params = ChargingRuleParams {
        safety_threshold: cfg.charging.safety_threshold,
        max_horizon: cfg.charging.max_horizon,
    };
    params.validate().map_err(|e| HarnessError::config(e.to_string()))?;
    let battery = match (cfg.charging.battery_constant, cfg.charging.battery_bound) {
        (Some(v), _) => BatterySource::Constant(v),
        (None, BatteryBound::Lower) => BatterySource::LowerBound,
        (None, BatteryBound::Upper) => BatterySource::UpperBound,
    };
    let jobs: Vec<(Policy, u64)> = values
        .iter()
        .flat_map(|&v| {
            let policy = Policy::Charging(ChargingPolicy {
                params,
                waiting: WaitingSource::Constant(v),
                battery,
            });
            seeds.iter().map(move |&s| (policy.clone(), s))
        })
        .collect();
    let metrics: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|(policy, seed)| run_job(&cfg.world, policy, *seed))
        .collect::<Result<_, _>>()?;
    let points: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    Ok(SweepResult::assemble(1, seeds, points, &metrics))
}

/// The (b, c, f) cross product from the configured value lists, restricted
/// to coefficient sums below 1 (the validity bound of the threshold).
pub fn bcf_grid(cfg: &ExperimentConfig) -> Vec<(f64, f64, f64)> {
    let sweep = &cfg.sweep;
    let mut grid = Vec::new();
    for &b in &sweep.b_values {
        for &c in &sweep.c_values {
            for &f in &sweep.f_values {
                if b + c + f < 1.0 {
                    grid.push((b, c, f));
                }
            }
        }
    }
    grid
}

/// Evaluate the protection scenario once per ((b, c, f), seed).
///
/// When the configuration names a future-birds estimator, it is trained per
/// seed through the iterative loop and then frozen into a per-tick-of-day
/// forecast table, so every grid point queries identical predictions; with
/// `f = 0` the forecast is weighted away entirely and the rows cannot depend
/// on it.
pub fn grid_search_bcf(
    cfg: &ExperimentConfig,
    grid: &[(f64, f64, f64)],
    seeds: &[u64],
) -> Result<SweepResult, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::config("sweep needs a non-empty (b, c, f) grid"));
    }
    if seeds.is_empty() {
        return Err(HarnessError::config("sweep needs at least one seed"));
    }
    for &(b, c, f) in grid {
        ProtectionRuleParams { b, c, f }
            .validate()
            .map_err(|e| HarnessError::config(e.to_string()))?;
    }
    let sources: Vec<BirdsSource> = seeds
        .iter()
        .map(|&seed| forecast_source(cfg, seed))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(Policy, u64)> = grid
        .iter()
        .flat_map(|&(b, c, f)| {
            let params = ProtectionRuleParams { b, c, f };
            seeds.iter().zip(&sources).map(move |(&s, birds)| {
                (Policy::Protection(ProtectionPolicy { params, birds: birds.clone() }), s)
            })
        })
        .collect();
    let metrics: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|(policy, seed)| run_job(&cfg.world, policy, *seed))
        .collect::<Result<_, _>>()?;
    let points: Vec<Vec<f64>> = grid.iter().map(|&(b, c, f)| vec![b, c, f]).collect();
    Ok(SweepResult::assemble(3, seeds, points, &metrics))
}

/// The bird-forecast source for one sweep seed: a frozen table from the
/// trained estimator, or the configured constant.
fn forecast_source(cfg: &ExperimentConfig, seed: u64) -> Result<BirdsSource, HarnessError> {
    let Some(id) = &cfg.protection.birds_estimator else {
        return Ok(BirdsSource::Constant(cfg.protection.birds_constant));
    };
    let outcome = iterative_training(cfg, seed)?;
    let handle = outcome
        .selected_estimator(id)
        .ok_or_else(|| HarnessError::config(format!("unknown estimator '{id}'")))?;
    let tpd = cfg.world.ticks_per_day;
    let delta = handle.spec.horizon.min;
    let table: Vec<f64> = (0..tpd)
        .map(|t| handle.predict(&time_of_day_snapshot(t, tpd), delta))
        .collect::<Result<_, _>>()
        .map_err(|e| {
            HarnessError::config(format!(
                "estimator '{id}' cannot be tabulated by time of day: {e}"
            ))
        })?;
    Ok(BirdsSource::Table(table))
}
