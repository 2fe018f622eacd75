//! Command-line front end for the simulator and experiment harness.
//!
//! Every subcommand is a pure function of `(--config + --set overrides,
//! seed)`: rerunning with the same inputs reproduces every output file byte
//! for byte.  Configuration mistakes exit with code 2, runtime failures
//! with 1.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fieldguard::backends::{evaluate, split_dataset, DataPoint};
use fieldguard::harness::{
    bcf_grid, grid_search_bcf, grid_search_constant, iterative_training, pareto_flags,
    ExperimentConfig, HarnessError, SweepResult, UtilityPoint,
};
use fieldguard::rng::{hash_seed, mix_seed};
use fieldguard::world::run_simulation;

#[derive(Parser)]
#[command(
    name = "fieldguard",
    version,
    about = "Deterministic field-protection drone simulator and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args)]
struct Common {
    /// Preset name (default, charging, protection) or path to a TOML file.
    #[arg(long, default_value = "default")]
    config: String,

    /// Override one configuration key, e.g. `--set world.n_drones=16` or
    /// `--set estimators.0.k=5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Seed override: replaces the run seed (simulate, train,
    /// eval-estimator) or the whole seed list (sweeps).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and export metrics, traces and datasets.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run the iterative simulate-train loop and export the report and the
    /// selected models.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate constant waiting-time forecasts over a value grid and seeds.
    SweepConstant {
        #[command(flatten)]
        common: Common,
        /// Comma-separated constants overriding the configured grid.
        #[arg(long, value_delimiter = ',', value_name = "V1,V2,...")]
        values: Option<Vec<f64>>,
    },
    /// Evaluate protection coefficients (b, c, f) over the configured grid
    /// and seeds.
    SweepBcf {
        #[command(flatten)]
        common: Common,
    },
    /// Flag the Pareto-efficient rows of a utility CSV
    /// (header `name,damage,survived`; config and seed are accepted but not
    /// read).
    Pareto {
        #[command(flatten)]
        common: Common,
        /// Input CSV with one utility point per row.
        #[arg(long)]
        input: PathBuf,
    },
    /// Collect data with the bootstrap policy, train a fresh model on a
    /// split, and report its held-out accuracy.
    EvalEstimator {
        #[command(flatten)]
        common: Common,
        /// Estimator id to evaluate; defaults to the first declared one.
        #[arg(long)]
        estimator: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Simulate { common } => simulate(&common),
        Command::Train { common } => train(&common),
        Command::SweepConstant { common, values } => sweep_constant(&common, values.as_deref()),
        Command::SweepBcf { common } => sweep_bcf(&common),
        Command::Pareto { common, input } => pareto(&common, &input),
        Command::EvalEstimator { common, estimator } => {
            eval_estimator(&common, estimator.as_deref())
        }
    }
}

/// Load, override, validate, and echo the configuration into `--out`.
fn load_config(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let cfg = ExperimentConfig::load_with_overrides(&common.config, &common.set)?;
    cfg.validate()?;
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(common.out.join("config.resolved"), cfg.resolved_toml()?)?;
    Ok(cfg)
}

/// The run seed: `--seed` if given, else the first configured seed.
fn base_seed(common: &Common, cfg: &ExperimentConfig) -> u64 {
    common.seed.unwrap_or(cfg.experiment.seeds[0])
}

/// The sweep seeds: `[--seed]` if given, else the configured list.
fn sweep_seeds(common: &Common, cfg: &ExperimentConfig) -> Vec<u64> {
    match common.seed {
        Some(s) => vec![s],
        None => cfg.experiment.seeds.clone(),
    }
}

fn simulate(common: &Common) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    let seed = base_seed(common, &cfg);
    let mut set = cfg.build_estimator_set()?;
    let policy = cfg.build_policy(&set)?;
    let result = run_simulation(&cfg.world, &policy, &mut set, seed)?;

    result.write_metrics_json(&common.out.join("metrics.json"))?;
    result.write_timeseries_csv(&common.out.join("timeseries.csv"))?;
    if cfg.world.log_decisions {
        result.write_decisions_csv(&common.out.join("decisions.csv"))?;
    }
    result.write_datasets(&common.out)?;
    println!(
        "seed {seed}: damage rate {:.4}, {}/{} drones survived",
        result.damage_rate, result.survived_drones, result.n_drones
    );
    Ok(())
}

/// JSON companion of the iteration report CSV.
#[derive(Serialize)]
struct TrainingSummary<'a> {
    base_seed: u64,
    selected_iteration: usize,
    rows: &'a [fieldguard::harness::IterationRow],
    evals: &'a [Vec<fieldguard::harness::EstimatorIterEval>],
}

fn train(common: &Common) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    let seed = base_seed(common, &cfg);
    let outcome = iterative_training(&cfg, seed)?;

    outcome.write_report_csv(&common.out.join("iteration_report.csv"))?;
    write_json_pretty(
        &common.out.join("training_summary.json"),
        &TrainingSummary {
            base_seed: seed,
            selected_iteration: outcome.selected_iteration,
            rows: &outcome.rows,
            evals: &outcome.evals,
        },
    )?;
    for handle in &outcome.selected {
        write_json_pretty(
            &common.out.join(format!("model_{}.json", handle.spec.id)),
            handle,
        )?;
    }
    println!(
        "selected iteration {} of {} (utility {:.4})",
        outcome.selected_iteration,
        outcome.rows.len(),
        outcome.rows[outcome.selected_iteration].utility
    );
    Ok(())
}

fn sweep_constant(common: &Common, values: Option<&[f64]>) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    let values = values.unwrap_or(&cfg.sweep.constant_values);
    let seeds = sweep_seeds(common, &cfg);
    let result = grid_search_constant(&cfg, values, &seeds)?;
    finish_sweep(common, &result, "sweep_constant.csv")
}

fn sweep_bcf(common: &Common) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    let grid = bcf_grid(&cfg);
    let seeds = sweep_seeds(common, &cfg);
    let result = grid_search_bcf(&cfg, &grid, &seeds)?;
    finish_sweep(common, &result, "sweep_bcf.csv")
}

fn finish_sweep(
    common: &Common,
    result: &SweepResult,
    file: &str,
) -> Result<(), HarnessError> {
    result.write_csv(&common.out.join(file))?;
    let front = result.rows.iter().filter(|r| r.pareto).count();
    println!(
        "{} grid points over {} seeds, {front} on the Pareto front",
        result.rows.len(),
        result.seeds.len()
    );
    Ok(())
}

fn pareto(common: &Common, input: &Path) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(input).map_err(|e| {
        HarnessError::config(format!("cannot read {}: {e}", input.display()))
    })?;
    let mut lines = text.lines();
    match lines.next() {
        Some("name,damage,survived") => {}
        other => {
            return Err(HarnessError::config(format!(
                "{}: expected header 'name,damage,survived', found {:?}",
                input.display(),
                other.unwrap_or("")
            )));
        }
    }
    // Echo the fields verbatim so re-running never reformats the numbers.
    let mut rows: Vec<(&str, &str, &str)> = Vec::new();
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (name, damage, survived) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(d), Some(s)) => (n, d, s),
            _ => {
                return Err(HarnessError::config(format!(
                    "{}:{}: expected 3 comma-separated fields",
                    input.display(),
                    lineno + 2
                )));
            }
        };
        let parse = |field: &str, what: &str| {
            field.parse::<f64>().map_err(|_| {
                HarnessError::config(format!(
                    "{}:{}: {what} '{field}' is not a number",
                    input.display(),
                    lineno + 2
                ))
            })
        };
        points.push(UtilityPoint::new(
            parse(damage, "damage")?,
            parse(survived, "survived")?,
        ));
        rows.push((name, damage, survived));
    }
    if points.is_empty() {
        return Err(HarnessError::EmptyPoints);
    }
    let flags = pareto_flags(&points);

    std::fs::create_dir_all(&common.out)?;
    let mut out = BufWriter::new(File::create(common.out.join("pareto.csv"))?);
    writeln!(out, "name,damage,survived,pareto")?;
    for ((name, damage, survived), flag) in rows.iter().zip(&flags) {
        writeln!(out, "{name},{damage},{survived},{}", u8::from(*flag))?;
    }
    out.flush()?;
    println!(
        "{} of {} points on the front",
        flags.iter().filter(|f| **f).count(),
        flags.len()
    );
    Ok(())
}

/// What `eval-estimator` reports.
#[derive(Serialize)]
struct EvalSummary {
    estimator: String,
    mse: f64,
    mae: f64,
    n_train: usize,
    n_test: usize,
    final_loss: f64,
}

fn eval_estimator(common: &Common, estimator: Option<&str>) -> Result<(), HarnessError> {
    let cfg = load_config(common)?;
    let seed = base_seed(common, &cfg);
    let mut set = cfg.build_estimator_set()?;
    let policy = cfg.build_policy(&set)?;
    let index = match estimator {
        Some(id) => set.index_of(id).ok_or_else(|| {
            HarnessError::config(format!(
                "no estimator '{id}' declared; declared ids: {}",
                set.entries
                    .iter()
                    .map(|e| e.handle.spec.id.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })?,
        None if !set.is_empty() => 0,
        None => {
            return Err(HarnessError::config(
                "the configuration declares no estimators to evaluate",
            ));
        }
    };
    let id = set.entry(index).handle.spec.id.clone();

    // Bootstrap data collection: same seed derivation as training iteration 0.
    let mut samples = Vec::new();
    for r in 0..cfg.experiment.runs_per_iteration {
        let result = run_simulation(&cfg.world, &policy, &mut set, mix_seed(seed, r as u64))?;
        if let Some(data) = result.datasets.into_iter().nth(index) {
            samples.extend(data.samples);
        }
    }

    let split_seed = mix_seed(seed, hash_seed("eval-split"));
    let (train, test) = split_dataset(&samples, cfg.experiment.test_fraction, split_seed)?;
    let mut fresh = set.entry(index).handle.clone();
    let report = fresh.train_update(train.clone())?;
    let points: Vec<DataPoint> = test.iter().map(DataPoint::from).collect();
    let eval = evaluate(&fresh, &points)?;

    eval.write_scatter_csv(&common.out.join("scatter.csv"))?;
    write_json_pretty(
        &common.out.join("eval.json"),
        &EvalSummary {
            estimator: id.clone(),
            mse: eval.mse,
            mae: eval.mae,
            n_train: train.len(),
            n_test: test.len(),
            final_loss: report.final_loss,
        },
    )?;
    println!(
        "{id}: mse {:.4}, mae {:.4} on {} held-out samples",
        eval.mse,
        eval.mae,
        test.len()
    );
    Ok(())
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| HarnessError::config(format!("serializing {}: {e}", path.display())))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
