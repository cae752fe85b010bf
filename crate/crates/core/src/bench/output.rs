use std::path::Path;

use super::{AggregateRow, BenchError, BenchResult, TraceColumn, TrialRecord};

pub const TRIALS_HEADER: [&str; 12] = [
    "trial_index",
    "algorithm",
    "N",
    "seed",
    "aligned_sq_error",
    "autocorr_sq_error",
    "success",
    "autocorr_success",
    "iterations",
    "wall_time_s",
    "final_objective",
    "status",
];

pub const AGGREGATE_HEADER: [&str; 6] = [
    "algorithm",
    "N",
    "mean_squared_error",
    "success_probability",
    "mean_wall_time",
    "mean_iterations",
];

/// 17 significant digits, enough to round-trip any `f64`.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn writer(path: &Path) -> BenchResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(csv_err(path))
}

pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> BenchResult<()> {
    let mut w = writer(path)?;
    w.write_record(TRIALS_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            r.trial_index.to_string(),
            r.algorithm.clone(),
            r.n.to_string(),
            r.seed.to_string(),
            float(r.aligned_sq_error),
            r.autocorr_sq_error.map(float).unwrap_or_default(),
            r.success.to_string(),
            r.autocorr_success.map(|b| b.to_string()).unwrap_or_default(),
            r.iterations.to_string(),
            float(r.wall_time_s),
            float(r.final_objective),
            r.status.clone(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> BenchResult<()> {
    let mut w = writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.n.to_string(),
            float(r.mean_squared_error),
            float(r.success_probability()),
            float(r.mean_wall_time),
            float(r.mean_iterations),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

/// Columns: `iteration`, then `<label>_squared` and `<label>_modulus` per algorithm.
pub fn write_trace_csv(path: &Path, columns: &[TraceColumn]) -> BenchResult<()> {
    let mut w = writer(path)?;
    let mut header = vec!["iteration".to_string()];
    for c in columns {
        header.push(format!("{}_squared", c.label));
        header.push(format!("{}_modulus", c.label));
    }
    w.write_record(&header).map_err(csv_err(path))?;
    let rows = columns.iter().map(|c| c.squared.len()).max().unwrap_or(0);
    for i in 0..rows {
        let mut rec = vec![i.to_string()];
        for c in columns {
            rec.push(float(c.squared[i]));
            rec.push(float(c.modulus[i]));
        }
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}
