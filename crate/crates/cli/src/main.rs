//! `prime`: run single solves, Monte Carlo sweeps, objective traces and the self test.
//!
//! Exit codes: 0 success, 1 invalid spec or arguments, 2 I/O failure, 3 self test failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use prime_core::bench::{
    build_instance, load_spec, run_experiment, run_selftest, trace_experiment, BenchError, ExperimentSpec, MatrixModel,
};
use prime_core::metrics::classify_with;
use prime_core::solvers::{solve, Algorithm, SolverConfig, WfStepRule};

const EXIT_SPEC: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "prime",
    version,
    about = "Phase retrieval solvers and Monte Carlo benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one synthetic instance and print the recovery error.
    Solve(Overrides),
    /// Run a full sweep and write trials.csv and aggregate.csv.
    Bench(Overrides),
    /// Record both objectives per iteration on one shared instance.
    Trace(Overrides),
    /// Run the built-in invariant checks.
    Selftest,
}

/// Spec file plus field overrides. Without a spec file, --model, --K and --N are required.
#[derive(Debug, Args)]
struct Overrides {
    /// TOML experiment spec.
    spec: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    model: Option<MatrixModel>,
    #[arg(long = "K")]
    k: Option<usize>,
    /// Repeatable; `solve` and `trace` use the first value.
    #[arg(long = "N")]
    n: Vec<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// 1000 trials instead of the default 100.
    #[arg(long, conflicts_with = "trials")]
    full: bool,
    #[arg(long = "noise-var")]
    noise_var: Option<f64>,
    /// Repeatable algorithm id, e.g. `power` or `gerchberg-saxton`.
    #[arg(long = "algo", value_parser = parse_algorithm)]
    algo: Vec<Algorithm>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Accelerate every listed algorithm that supports it (all but Wirtinger Flow).
    #[arg(long)]
    accelerate: bool,
    /// Override the iteration cap of every algorithm.
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Trial index of the instance used by `solve`.
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

fn parse_model(s: &str) -> Result<MatrixModel, String> {
    s.parse().map_err(|e: BenchError| e.to_string())
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: prime_core::PrimeError| e.to_string())
}

fn config_for(alg: Algorithm, accelerate: bool) -> SolverConfig {
    let mut cfg = SolverConfig::new(alg);
    if alg == Algorithm::WirtingerFlow {
        cfg.wf_step = WfStepRule::Backtracking;
    } else {
        cfg.accelerate = accelerate;
    }
    cfg
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentSpec, BenchError> {
        let mut spec = match &self.spec {
            Some(path) => load_spec(path)?,
            None => {
                let missing = |what: &str| BenchError::Spec(format!("{what} is required without a spec file"));
                let model = self.model.ok_or_else(|| missing("--model"))?;
                let k = self.k.ok_or_else(|| missing("--K"))?;
                if self.n.is_empty() {
                    return Err(missing("--N"));
                }
                ExperimentSpec::new(model, k, self.n.clone(), "results")
            }
        };
        if let Some(m) = self.model {
            spec.matrix_model = m;
        }
        if let Some(k) = self.k {
            spec.k = k;
        }
        if !self.n.is_empty() {
            spec.n_values = self.n.clone();
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if self.full {
            spec.trials = 1000;
        }
        if let Some(v) = self.noise_var {
            spec.noise_variance = v;
        }
        if !self.algo.is_empty() {
            spec.algorithms = self.algo.iter().map(|&a| config_for(a, self.accelerate)).collect();
        } else if self.accelerate {
            for cfg in &mut spec.algorithms {
                cfg.accelerate = cfg.algorithm != Algorithm::WirtingerFlow;
            }
        }
        if let Some(s) = self.seed {
            spec.master_seed = s;
        }
        if let Some(o) = &self.out {
            spec.output_dir = o.clone();
        }
        if let Some(t) = self.threshold {
            spec.success_threshold = Some(t);
        }
        if let Some(m) = self.max_iters {
            for cfg in &mut spec.algorithms {
                cfg.max_iters = m;
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn run_solve(o: &Overrides) -> Result<(), BenchError> {
    let spec = o.resolve()?;
    let n = spec.n_values[0];
    let (p, seed) = build_instance(&spec, o.trial, n, None)?;
    let x_o = p.ground_truth().expect("synthetic instance");
    println!(
        "model {:?}, K = {}, N = {n}, trial {} (seed {seed})",
        spec.matrix_model, spec.k, o.trial
    );
    for cfg in &spec.algorithms {
        let run = solve(&p, cfg)?;
        let rep = classify_with(&run.final_x, x_o, spec.matrix_model.setting(), spec.threshold());
        let autocorr = rep
            .autocorr_squared_error
            .map(|e| format!(", autocorr error {e:.3e}"))
            .unwrap_or_default();
        println!(
            "{:<26} error {:.3e}{autocorr}, success {}, iterations {}, objective {:.3e}, {}",
            cfg.label(),
            rep.aligned_squared_error,
            rep.primary_success(),
            run.iterations_used,
            run.final_objective(),
            run.status,
        );
    }
    Ok(())
}

fn run_bench(o: &Overrides) -> Result<(), BenchError> {
    let spec = o.resolve()?;
    let summary = run_experiment(&spec)?;
    println!(
        "{:<26} {:>5} {:>12} {:>8} {:>10} {:>8}",
        "algorithm", "N", "mse", "p_succ", "time_s", "iters"
    );
    for row in &summary.aggregate {
        println!(
            "{:<26} {:>5} {:>12.3e} {:>8.3} {:>10.2e} {:>8.1}",
            row.algorithm,
            row.n,
            row.mean_squared_error,
            row.success_probability(),
            row.mean_wall_time,
            row.mean_iterations
        );
    }
    println!(
        "wrote {} and {}",
        summary.trials_csv.display(),
        summary.aggregate_csv.display()
    );
    Ok(())
}

fn run_trace(o: &Overrides) -> Result<(), BenchError> {
    let spec = o.resolve()?;
    let (columns, path) = trace_experiment(&spec, spec.n_values[0])?;
    for col in &columns {
        println!(
            "{:<26} final squared {:.3e}, final modulus {:.3e}, {}",
            col.label,
            col.squared.last().copied().unwrap_or(f64::NAN),
            col.modulus.last().copied().unwrap_or(f64::NAN),
            col.status
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn exit_code(e: &BenchError) -> u8 {
    match e {
        BenchError::Io { .. } | BenchError::Csv { .. } => EXIT_IO,
        BenchError::Spec(_) | BenchError::Solver(_) => EXIT_SPEC,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_SPEC)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(o) => run_solve(o),
        Command::Bench(o) => run_bench(o),
        Command::Trace(o) => run_trace(o),
        Command::Selftest => {
            let report = run_selftest();
            print!("{report}");
            return if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SELFTEST)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
