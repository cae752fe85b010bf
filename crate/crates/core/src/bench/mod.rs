//! Seeded Monte Carlo experiments over algorithms and measurement counts.
//!
//! Every cell `(N, trial)` draws one problem instance and runs all configured
//! algorithms on it, so algorithms are compared on identical data. Seeds are a
//! pure function of `(master_seed, trial_index, N)`; results do not depend on
//! thread scheduling.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::PrimeError;
use crate::metrics::{classify_with, Setting};
use crate::problem::{
    complex_gaussian_vector, gen_dft_ensemble, gen_gaussian_ensemble, objective_modulus, objective_squared,
    MeasurementEnsemble, ProblemInstance,
};
use crate::solvers::{solve, solve_observed, Algorithm, RunStatus, SolverConfig, WfStepRule};
use crate::CVector;

mod output;
mod selftest;
mod spec_file;

pub use output::{write_aggregate_csv, write_trace_csv, write_trials_csv, AGGREGATE_HEADER, TRIALS_HEADER};
pub use selftest::{run_selftest, SelftestCheck, SelftestReport};
pub use spec_file::{load_spec, parse_spec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Solver(#[from] PrimeError),
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixModel {
    Gaussian,
    #[serde(alias = "partialdft", alias = "dft")]
    PartialDft,
}

impl MatrixModel {
    pub fn setting(self) -> Setting {
        match self {
            MatrixModel::Gaussian => Setting::GaussianDirect,
            MatrixModel::PartialDft => Setting::DftAutocorr,
        }
    }
}

impl std::str::FromStr for MatrixModel {
    type Err = BenchError;

    fn from_str(s: &str) -> BenchResult<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "gaussian" => Ok(MatrixModel::Gaussian),
            "partial-dft" | "partialdft" | "dft" => Ok(MatrixModel::PartialDft),
            other => Err(BenchError::Spec(format!("unknown matrix model '{other}'"))),
        }
    }
}

/// The default algorithm line-up: Wirtinger Flow (backtracking), Gerchberg-Saxton
/// and the four MM algorithms with acceleration.
pub fn default_algorithms() -> Vec<SolverConfig> {
    let mut wf = SolverConfig::new(Algorithm::WirtingerFlow);
    wf.wf_step = WfStepRule::Backtracking;
    let mut out = vec![wf, SolverConfig::new(Algorithm::GerchbergSaxton)];
    out.extend(
        [
            Algorithm::ModulusSingleTerm,
            Algorithm::ModulusBothTerms,
            Algorithm::Power,
            Algorithm::PowerBacktracking,
        ]
        .map(|a| SolverConfig::new(a).accelerated()),
    );
    out
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub matrix_model: MatrixModel,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<SolverConfig>,
    #[serde(default)]
    pub master_seed: u64,
    /// `None` selects 1e-4 (Gaussian) or 1e-8 (partial DFT).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_threshold: Option<f64>,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn new(matrix_model: MatrixModel, k: usize, n_values: Vec<usize>, output_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            matrix_model,
            k,
            n_values,
            trials: default_trials(),
            noise_variance: 0.0,
            algorithms: default_algorithms(),
            master_seed: 0,
            success_threshold: None,
            output_dir: output_dir.into(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.success_threshold
            .unwrap_or_else(|| self.matrix_model.setting().default_threshold())
    }

    pub fn validate(&self) -> BenchResult<()> {
        let bad = |m: String| Err(BenchError::Spec(m));
        if self.k == 0 {
            return bad("K must be positive".into());
        }
        if self.n_values.is_empty() {
            return bad("N_values must not be empty".into());
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n == 0) {
            return bad(format!("N = {n} is not positive"));
        }
        if self.matrix_model == MatrixModel::PartialDft {
            if let Some(&n) = self.n_values.iter().find(|&&n| n < self.k) {
                return bad(format!("partial DFT needs N >= K, got N = {n} < K = {}", self.k));
            }
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return bad("noise_variance must be finite and nonnegative".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        for cfg in &self.algorithms {
            cfg.validate().map_err(|e| BenchError::Spec(e.to_string()))?;
        }
        if let Some(t) = self.success_threshold {
            if !(t.is_finite() && t > 0.0) {
                return bad("success_threshold must be positive".into());
            }
        }
        Ok(())
    }
}

/// One row of the per-trial CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub algorithm: String,
    pub n: usize,
    pub seed: u64,
    pub aligned_sq_error: f64,
    pub autocorr_sq_error: Option<f64>,
    pub success: bool,
    pub autocorr_success: Option<bool>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub final_objective: f64,
    pub status: String,
}

impl TrialRecord {
    /// Success under the setting's rule (autocorrelation for partial DFT).
    pub fn primary_success(&self) -> bool {
        self.autocorr_success.unwrap_or(self.success)
    }

    /// The error the setting's success rule looks at.
    pub fn primary_error(&self) -> f64 {
        self.autocorr_sq_error.unwrap_or(self.aligned_sq_error)
    }

    /// Same record with the wall time zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> TrialRecord {
        TrialRecord {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

/// One row of the aggregate CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: String,
    pub n: usize,
    pub mean_squared_error: f64,
    pub successes: usize,
    pub trials: usize,
    pub mean_wall_time: f64,
    pub mean_iterations: f64,
}

impl AggregateRow {
    pub fn success_probability(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub records: Vec<TrialRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub trials_csv: PathBuf,
    pub aggregate_csv: PathBuf,
}

impl ExperimentSummary {
    pub fn row(&self, label: &str, n: usize) -> Option<&AggregateRow> {
        self.aggregate.iter().find(|r| r.algorithm == label && r.n == n)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a seed sequence.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5052_494d_455f_5052, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

const SIGNAL_STREAM: u64 = 1;
const MATRIX_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Seed of cell `(trial_index, n)`; shared by all algorithms of the cell.
pub fn trial_seed(master_seed: u64, trial_index: usize, n: usize) -> u64 {
    mix_seed(&[master_seed, trial_index as u64, n as u64])
}

fn unit_signal(k: usize, seed: u64) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = complex_gaussian_vector(k, &mut rng);
    let norm = x.norm();
    x.unscale(norm)
}

/// The fixed Gaussian-model ground truth, drawn once from the master seed.
pub fn gaussian_ground_truth(master_seed: u64, k: usize) -> CVector {
    unit_signal(k, mix_seed(&[master_seed, SIGNAL_STREAM]))
}

/// Draws the problem instance of cell `(trial_index, n)`.
///
/// Gaussian: fixed unit-norm ground truth, fresh measurement matrix per trial.
/// Partial DFT: fixed matrix, fresh unit-norm ground truth per trial.
pub fn build_instance(
    spec: &ExperimentSpec,
    trial_index: usize,
    n: usize,
    dft: Option<&Arc<MeasurementEnsemble>>,
) -> BenchResult<(ProblemInstance, u64)> {
    let seed = trial_seed(spec.master_seed, trial_index, n);
    let (ensemble, x_o) = match spec.matrix_model {
        MatrixModel::Gaussian => (
            Arc::new(gen_gaussian_ensemble(spec.k, n, mix_seed(&[seed, MATRIX_STREAM]))?),
            gaussian_ground_truth(spec.master_seed, spec.k),
        ),
        MatrixModel::PartialDft => {
            let ens = match dft {
                Some(e) => Arc::clone(e),
                None => Arc::new(gen_dft_ensemble(spec.k, n)?),
            };
            (ens, unit_signal(spec.k, mix_seed(&[seed, SIGNAL_STREAM])))
        }
    };
    let p = ProblemInstance::synthesize(ensemble, x_o, spec.noise_variance, mix_seed(&[seed, NOISE_STREAM]))?;
    Ok((p, seed))
}

fn record_for(
    spec: &ExperimentSpec,
    p: &ProblemInstance,
    cfg: &SolverConfig,
    trial_index: usize,
    seed: u64,
) -> TrialRecord {
    let x_o = p.ground_truth().expect("bench instances carry ground truth");
    let setting = spec.matrix_model.setting();
    let base = TrialRecord {
        trial_index,
        algorithm: cfg.label(),
        n: p.n(),
        seed,
        aligned_sq_error: f64::NAN,
        autocorr_sq_error: (setting == Setting::DftAutocorr).then_some(f64::NAN),
        success: false,
        autocorr_success: (setting == Setting::DftAutocorr).then_some(false),
        iterations: 0,
        wall_time_s: 0.0,
        final_objective: f64::NAN,
        status: String::new(),
    };
    match solve(p, cfg) {
        Err(e) => TrialRecord {
            status: RunStatus::Failed(e.to_string()).to_string(),
            ..base
        },
        Ok(run) => {
            let rep = classify_with(&run.final_x, x_o, setting, spec.threshold());
            TrialRecord {
                aligned_sq_error: rep.aligned_squared_error,
                autocorr_sq_error: rep.autocorr_squared_error,
                success: rep.success,
                autocorr_success: rep.autocorr_success,
                iterations: run.iterations_used,
                wall_time_s: run.wall_time,
                final_objective: run.final_objective(),
                status: run.status.to_string(),
                ..base
            }
        }
    }
}

/// Runs one algorithm on cell `(trial_index, n)`. Solver failures are recorded
/// in the returned row.
pub fn run_trial(spec: &ExperimentSpec, trial_index: usize, n: usize, cfg: &SolverConfig) -> BenchResult<TrialRecord> {
    let (p, seed) = build_instance(spec, trial_index, n, None)?;
    Ok(record_for(spec, &p, cfg, trial_index, seed))
}

/// All algorithms on one cell, in configuration order.
pub fn run_cell(
    spec: &ExperimentSpec,
    trial_index: usize,
    n: usize,
    dft: Option<&Arc<MeasurementEnsemble>>,
) -> BenchResult<Vec<TrialRecord>> {
    let (p, seed) = build_instance(spec, trial_index, n, dft)?;
    Ok(spec
        .algorithms
        .iter()
        .map(|cfg| record_for(spec, &p, cfg, trial_index, seed))
        .collect())
}

/// Runs every cell without touching the filesystem. Rows are ordered by
/// `N`, then algorithm, then trial.
pub fn collect_records(spec: &ExperimentSpec) -> BenchResult<Vec<TrialRecord>> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.n_values.len() * spec.trials * spec.algorithms.len());
    for &n in &spec.n_values {
        let dft = match spec.matrix_model {
            MatrixModel::PartialDft => Some(Arc::new(gen_dft_ensemble(spec.k, n)?)),
            MatrixModel::Gaussian => None,
        };
        let cells = (0..spec.trials)
            .into_par_iter()
            .map(|t| run_cell(spec, t, n, dft.as_ref()))
            .collect::<BenchResult<Vec<_>>>()?;
        for a in 0..spec.algorithms.len() {
            records.extend(cells.iter().map(|cell| cell[a].clone()));
        }
    }
    Ok(records)
}

/// Aggregates records per `(algorithm, N)` in first-seen order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut rows: Vec<(AggregateRow, f64, f64, f64)> = Vec::new();
    for r in records {
        let idx = match rows
            .iter()
            .position(|(row, ..)| row.algorithm == r.algorithm && row.n == r.n)
        {
            Some(i) => i,
            None => {
                rows.push((
                    AggregateRow {
                        algorithm: r.algorithm.clone(),
                        n: r.n,
                        mean_squared_error: 0.0,
                        successes: 0,
                        trials: 0,
                        mean_wall_time: 0.0,
                        mean_iterations: 0.0,
                    },
                    0.0,
                    0.0,
                    0.0,
                ));
                rows.len() - 1
            }
        };
        let (row, err, time, iters) = &mut rows[idx];
        row.trials += 1;
        row.successes += usize::from(r.primary_success());
        *err += r.primary_error();
        *time += r.wall_time_s;
        *iters += r.iterations as f64;
    }
    rows.into_iter()
        .map(|(mut row, err, time, iters)| {
            let t = row.trials as f64;
            row.mean_squared_error = err / t;
            row.mean_wall_time = time / t;
            row.mean_iterations = iters / t;
            row
        })
        .collect()
}

fn prepare_output_dir(dir: &Path) -> BenchResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"").map_err(|e| BenchError::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| BenchError::io(&probe, e))
}

/// Runs the full sweep and writes `trials.csv` and `aggregate.csv` into the
/// output directory. The directory is checked for writability before any solve.
pub fn run_experiment(spec: &ExperimentSpec) -> BenchResult<ExperimentSummary> {
    spec.validate()?;
    prepare_output_dir(&spec.output_dir)?;
    let records = collect_records(spec)?;
    let aggregate = aggregate(&records);
    let trials_csv = spec.output_dir.join("trials.csv");
    let aggregate_csv = spec.output_dir.join("aggregate.csv");
    write_trials_csv(&trials_csv, &records)?;
    write_aggregate_csv(&aggregate_csv, &aggregate)?;
    Ok(ExperimentSummary {
        records,
        aggregate,
        trials_csv,
        aggregate_csv,
    })
}

/// Objective histories of one algorithm on the shared trace instance.
#[derive(Debug, Clone)]
pub struct TraceColumn {
    pub label: String,
    pub squared: Vec<f64>,
    pub modulus: Vec<f64>,
    pub status: RunStatus,
}

/// Runs every configured algorithm on the instance of trial 0 at `n`, records
/// both objectives per iteration and writes `trace_N{n}.csv`. Histories that
/// stop early are padded with their final values to `max_iters + 1` rows.
pub fn trace_experiment(spec: &ExperimentSpec, n: usize) -> BenchResult<(Vec<TraceColumn>, PathBuf)> {
    let mut single = spec.clone();
    single.n_values = vec![n];
    single.validate()?;
    prepare_output_dir(&spec.output_dir)?;
    let (p, _) = build_instance(&single, 0, n, None)?;
    let rows = spec.algorithms.iter().map(|c| c.max_iters).max().unwrap_or(0) + 1;
    let mut columns = Vec::with_capacity(spec.algorithms.len());
    for cfg in &spec.algorithms {
        let mut squared = Vec::with_capacity(rows);
        let mut modulus = Vec::with_capacity(rows);
        let status = match solve_observed(&p, cfg, |x| {
            squared.push(objective_squared(&p, x));
            modulus.push(objective_modulus(&p, x));
        }) {
            Ok(run) => run.status,
            Err(e) => RunStatus::Failed(e.to_string()),
        };
        for v in [&mut squared, &mut modulus] {
            let last = v.last().copied().unwrap_or(f64::NAN);
            v.resize(rows, last);
        }
        columns.push(TraceColumn {
            label: cfg.label(),
            squared,
            modulus,
            status,
        });
    }
    let path = spec.output_dir.join(format!("trace_N{n}.csv"));
    write_trace_csv(&path, &columns)?;
    Ok((columns, path))
}
