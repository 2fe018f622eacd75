//! Dataset CSV import/export.
//!
//! Collected training samples are persisted as CSV with the header
//! `t_observed,t_resolved,<input names...>,label`, one column per entry of
//! the encoded input vector (one-hot features expand to one column per
//! symbol, multi-horizon estimators append `delta_over_max`).  The same
//! files feed external analysis and the `eval-estimator` command.

use std::path::Path;

use super::{EstimatorError, EstimatorSpec, TrainingSample};

/// Write `samples` for the estimator described by `spec`.
pub fn write_dataset_csv(
    path: &Path,
    spec: &EstimatorSpec,
    samples: &[TrainingSample],
) -> Result<(), EstimatorError> {
    let columns = spec.input_column_names();
    write_dataset_csv_with_columns(path, &columns, samples)
}

/// Write `samples` with explicit input column names.
pub fn write_dataset_csv_with_columns(
    path: &Path,
    input_columns: &[String],
    samples: &[TrainingSample],
) -> Result<(), EstimatorError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = vec!["t_observed", "t_resolved"];
    header.extend(input_columns.iter().map(String::as_str));
    header.push("label");
    w.write_record(&header)?;
    for s in samples {
        if s.input.len() != input_columns.len() {
            return Err(EstimatorError::DatasetColumns {
                expected: input_columns.len(),
                got: s.input.len(),
            });
        }
        let mut record: Vec<String> = Vec::with_capacity(3 + s.input.len());
        record.push(s.t_observed.to_string());
        record.push(s.t_resolved.to_string());
        record.extend(s.input.iter().map(|v| v.to_string()));
        record.push(s.label.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset CSV back into `(input column names, samples)`.
pub fn read_dataset_csv(path: &Path) -> Result<(Vec<String>, Vec<TrainingSample>), EstimatorError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let n_cols = header.len();
    if n_cols < 3 || &header[0] != "t_observed" || &header[1] != "t_resolved"
        || &header[n_cols - 1] != "label"
    {
        return Err(EstimatorError::DatasetColumns {
            expected: 3,
            got: n_cols,
        });
    }
    let input_columns: Vec<String> = header.iter().skip(2).take(n_cols - 3).map(String::from).collect();

    let mut samples = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse_f = |i: usize| -> Result<f64, EstimatorError> {
            record[i].parse::<f64>().map_err(|_| EstimatorError::DatasetColumns {
                expected: n_cols,
                got: record.len(),
            })
        };
        let parse_t = |i: usize| -> Result<u64, EstimatorError> {
            record[i].parse::<u64>().map_err(|_| EstimatorError::DatasetColumns {
                expected: n_cols,
                got: record.len(),
            })
        };
        if record.len() != n_cols {
            return Err(EstimatorError::DatasetColumns {
                expected: n_cols,
                got: record.len(),
            });
        }
        let input: Vec<f64> = (2..n_cols - 1)
            .map(parse_f)
            .collect::<Result<_, _>>()?;
        samples.push(TrainingSample {
            t_observed: parse_t(0)?,
            t_resolved: parse_t(1)?,
            input,
            label: parse_f(n_cols - 1)?,
        });
    }
    Ok((input_columns, samples))
}
