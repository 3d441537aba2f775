//! Versioned CSV files written by runs and sweeps.
//!
//! Every file starts with a `# <schema> v<N>` line followed by a header row.
//! Column sets and order are fixed per schema version.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RECORDS_SCHEMA: &str = "# bgpo-records v1";
pub const ITERATIONS_SCHEMA: &str = "# bgpo-iterations v1";
pub const TIMING_SCHEMA: &str = "# bgpo-timing v1";
pub const AGGREGATE_SCHEMA: &str = "# bgpo-aggregate v1";

/// One row per point of the evaluation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Optimizer iterations completed.
    pub iteration: u64,
    /// Grid point: a multiple of the eval interval, or the final budget.
    pub timesteps: u64,
    /// Environment steps actually consumed so far.
    pub env_steps: u64,
    /// Mean undiscounted return of the latest training batch.
    pub train_return: f64,
    /// Mean and population std of undiscounted evaluation returns.
    pub eval_return: f64,
    pub eval_return_std: f64,
    /// Surrogate Bregman-gradient norm of the latest iteration.
    pub metric: Option<f64>,
    /// Exact Bregman-gradient norm (tabular runs only).
    pub exact_metric: Option<f64>,
    pub eta: Option<f64>,
    pub beta: Option<f64>,
    pub eta_clamped: bool,
    pub beta_clamped: bool,
}

/// One row per optimizer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub env_steps: u64,
    pub train_return: f64,
    pub metric: f64,
    pub exact_metric: Option<f64>,
    pub eta: f64,
    pub eta_raw: f64,
    pub eta_clamped: bool,
    pub beta: f64,
    pub beta_raw: f64,
    pub beta_clamped: bool,
    pub mean_weight: Option<f64>,
    pub clipped_weights: usize,
    pub nonfinite_weights: usize,
    pub value_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub iteration: u64,
    pub timesteps: u64,
    pub wall_clock_s: f64,
}

/// Cross-seed statistics at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub timesteps: u64,
    pub n_seeds: usize,
    pub eval_mean: f64,
    pub eval_std: f64,
    pub train_mean: f64,
    pub train_std: f64,
}

/// Appends rows to a schema-headed CSV file, flushing after each row so a
/// failed run leaves a readable partial log.
pub struct CsvLog {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvLog {
    pub fn create(path: &Path, schema: &str) -> Result<Self> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "{schema}").map_err(|e| Error::io(path, e))?;
        Ok(CsvLog {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, row: &T) -> Result<()> {
        self.writer
            .serialize(row)
            .map_err(|e| Error::Csv(format!("{}: {e}", self.path.display())))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes `rows` under `schema`, replacing any existing file.
pub fn write_csv<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> Result<()> {
    let mut log = CsvLog::create(path, schema)?;
    rows.iter().try_for_each(|r| log.write(r))
}

/// The schema line of a file.
pub fn read_schema(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    BufReader::new(file)
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    Ok(line.trim_end().to_string())
}

/// Reads a file written under `schema`.
pub fn read_csv<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let found = read_schema(path)?;
    if found != schema {
        return Err(Error::Csv(format!(
            "{}: expected schema {schema:?}, found {found:?}",
            path.display()
        )));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut skip = String::new();
    reader.read_line(&mut skip).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|row| row.map_err(|e| Error::Csv(format!("{}: {e}", path.display()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_optional_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![
            RunRecord {
                iteration: 0,
                timesteps: 0,
                env_steps: 0,
                train_return: 12.5,
                eval_return: 20.0,
                eval_return_std: 1.5,
                metric: None,
                exact_metric: None,
                eta: None,
                beta: None,
                eta_clamped: false,
                beta_clamped: false,
            },
            RunRecord {
                iteration: 3,
                timesteps: 100,
                env_steps: 104,
                train_return: 0.1 + 0.2,
                eval_return: -1e-300,
                eval_return_std: 0.0,
                metric: Some(0.25),
                exact_metric: Some(1.0 / 3.0),
                eta: Some(0.866),
                beta: Some(1.0),
                eta_clamped: false,
                beta_clamped: true,
            },
        ];
        write_csv(&path, RECORDS_SCHEMA, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# bgpo-records v1\niteration,timesteps,"));
        let back: Vec<RunRecord> = read_csv(&path, RECORDS_SCHEMA).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_csv::<AggregateRecord>(&path, AGGREGATE_SCHEMA, &[]).unwrap();
        assert!(read_csv::<RunRecord>(&path, RECORDS_SCHEMA).is_err());
        assert!(read_csv::<AggregateRecord>(&path, AGGREGATE_SCHEMA).unwrap().is_empty());
    }
}
