//! Train/test splitting and model evaluation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use super::{BackendError, DataPoint, Regressor};
use crate::rng::rng_from_seed;

/// Accuracy summary of a model on a held-out set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean squared error.
    pub mse: f64,
    /// Mean absolute error.
    pub mae: f64,
    /// One `(predicted, true)` pair per test sample, in test-set order.
    pub scatter: Vec<(f64, f64)>,
}

impl EvalReport {
    /// Write the scatter as a two-column CSV (`predicted,true`).
    pub fn write_scatter_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "predicted,true")?;
        for (p, t) in &self.scatter {
            writeln!(file, "{p},{t}")?;
        }
        file.flush()
    }
}

/// Randomly split `data` into `(train, test)` with `⌈n · test_fraction⌉`
/// test samples, deterministically for a given `seed`.
pub fn split_dataset<T: Clone>(
    data: &[T],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), BackendError> {
    if !(0.0..=1.0).contains(&test_fraction) || !test_fraction.is_finite() {
        return Err(BackendError::InvalidTestFraction(test_fraction));
    }
    let n = data.len();
    let n_test = (n as f64 * test_fraction).ceil() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let test: Vec<T> = order[..n_test].iter().map(|&i| data[i].clone()).collect();
    let train: Vec<T> = order[n_test..].iter().map(|&i| data[i].clone()).collect();
    Ok((train, test))
}

/// Evaluate `model` on a non-empty `test` set.
pub fn evaluate(model: &dyn Regressor, test: &[DataPoint]) -> Result<EvalReport, BackendError> {
    if test.is_empty() {
        return Err(BackendError::EmptyData);
    }
    let mut scatter = Vec::with_capacity(test.len());
    let mut sq = 0.0;
    let mut abs = 0.0;
    for p in test {
        let predicted = model.predict(&p.x)?;
        let err = predicted - p.y;
        sq += err * err;
        abs += err.abs();
        scatter.push((predicted, p.y));
    }
    let n = test.len() as f64;
    Ok(EvalReport {
        mse: sq / n,
        mae: abs / n,
        scatter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::ConstantModel;
    use rand::Rng;

    #[test]
    fn split_sizes_use_ceiling_of_test_fraction() {
        let data: Vec<u32> = (0..10).collect();
        let (train, test) = split_dataset(&data, 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        // 11 * 0.25 = 2.75, so 3 test samples.
        let data11: Vec<u32> = (0..11).collect();
        let (train11, test11) = split_dataset(&data11, 0.25, 1).unwrap();
        assert_eq!((train11.len(), test11.len()), (8, 3));
    }

    #[test]
    fn split_is_a_disjoint_partition() {
        let data: Vec<u32> = (0..100).collect();
        let (train, test) = split_dataset(&data, 0.3, 7).unwrap();
        let mut all: Vec<u32> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, data, "train and test must partition the input");
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let data: Vec<u32> = (0..50).collect();
        let a = split_dataset(&data, 0.2, 3).unwrap();
        let b = split_dataset(&data, 0.2, 3).unwrap();
        let c = split_dataset(&data, 0.2, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c, "different seeds should shuffle differently");
    }

    #[test]
    fn split_handles_edge_fractions() {
        let data: Vec<u32> = (0..5).collect();
        let (train, test) = split_dataset(&data, 0.0, 1).unwrap();
        assert_eq!((train.len(), test.len()), (5, 0));
        let (train, test) = split_dataset(&data, 1.0, 1).unwrap();
        assert_eq!((train.len(), test.len()), (0, 5));
        assert!(split_dataset(&data, 1.5, 1).is_err());
        assert!(split_dataset(&data, -0.1, 1).is_err());
        assert!(split_dataset(&data, f64::NAN, 1).is_err());
    }

    #[test]
    fn constant_zero_on_plus_minus_one_has_unit_errors() {
        let model = ConstantModel::new(0.0).unwrap();
        let test = vec![
            DataPoint::new(vec![0.0], 1.0),
            DataPoint::new(vec![0.0], -1.0),
        ];
        let report = evaluate(&model, &test).unwrap();
        assert!((report.mse - 1.0).abs() < 1e-12);
        assert!((report.mae - 1.0).abs() < 1e-12);
        assert_eq!(report.scatter, vec![(0.0, 1.0), (0.0, -1.0)]);
    }

    #[test]
    fn mae_squared_never_exceeds_mse() {
        // Jensen: (mean |e|)^2 <= mean e^2 for any error distribution.
        let mut rng = crate::rng::rng_from_seed(11);
        for _ in 0..20 {
            let model = ConstantModel::new(rng.gen_range(-1.0..1.0)).unwrap();
            let test: Vec<DataPoint> = (0..30)
                .map(|_| DataPoint::new(vec![0.0], rng.gen_range(-3.0..3.0)))
                .collect();
            let report = evaluate(&model, &test).unwrap();
            assert!(
                report.mae * report.mae <= report.mse + 1e-12,
                "mae^2 = {} must not exceed mse = {}",
                report.mae * report.mae,
                report.mse
            );
        }
    }

    #[test]
    fn evaluate_rejects_empty_test_set() {
        let model = ConstantModel::new(0.0).unwrap();
        assert!(matches!(evaluate(&model, &[]), Err(BackendError::EmptyData)));
    }

    #[test]
    fn scatter_csv_has_header_and_one_row_per_sample() {
        let report = EvalReport {
            mse: 0.0,
            mae: 0.0,
            scatter: vec![(1.5, 2.0), (0.25, 0.25)],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scatter.csv");
        report.write_scatter_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "predicted,true\n1.5,2\n0.25,0.25\n");
    }
}
