//! The six iterative algorithms behind one interface.
//!
//! Algorithms for the squared objective (Wirtinger Flow, power, power
//! backtracking) record `objective_squared` in their trace; the modulus family
//! (Gerchberg-Saxton, single-term, both-terms) records `objective_modulus`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::accel::accelerated_step;
use crate::error::{PrimeError, Result};
use crate::linalg::{lambda_max_gram, lambda_max_phi};
use crate::problem::{objective_modulus, objective_squared, spectral_init, EnsembleKind, ProblemInstance};
use crate::CVector;

pub mod modulus;
pub mod power;
pub mod wirtinger;

pub use modulus::{
    eval_majorizer_modulus, guarded_phase, phase_factors, step_gerchberg_saxton, step_modulus_both_terms,
    step_modulus_single_term,
};
pub use power::{
    build_w, eval_majorizer_power, lemma2_bound, resolve_d, step_power, step_power_backtracking, BacktrackingStep,
    Lemma2Bound, MAX_BACKTRACKING_PASSES,
};
pub use wirtinger::{heuristic_step, step_wirtinger_flow, WirtingerStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    WirtingerFlow,
    GerchbergSaxton,
    ModulusSingleTerm,
    ModulusBothTerms,
    Power,
    PowerBacktracking,
}

/// Which objective an algorithm minimizes (and records).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveFamily {
    /// `sum (y - |a^H x|^2)^2`
    Squared,
    /// `sum (sqrt(y) - |a^H x|)^2`
    Modulus,
}

impl ObjectiveFamily {
    pub fn eval(self, p: &ProblemInstance, x: &CVector) -> f64 {
        match self {
            ObjectiveFamily::Squared => objective_squared(p, x),
            ObjectiveFamily::Modulus => objective_modulus(p, x),
        }
    }
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::WirtingerFlow,
        Algorithm::GerchbergSaxton,
        Algorithm::ModulusSingleTerm,
        Algorithm::ModulusBothTerms,
        Algorithm::Power,
        Algorithm::PowerBacktracking,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::WirtingerFlow => "wirtinger-flow",
            Algorithm::GerchbergSaxton => "gerchberg-saxton",
            Algorithm::ModulusSingleTerm => "modulus-single-term",
            Algorithm::ModulusBothTerms => "modulus-both-terms",
            Algorithm::Power => "power",
            Algorithm::PowerBacktracking => "power-backtracking",
        }
    }

    pub fn family(self) -> ObjectiveFamily {
        match self {
            Algorithm::WirtingerFlow | Algorithm::Power | Algorithm::PowerBacktracking => ObjectiveFamily::Squared,
            _ => ObjectiveFamily::Modulus,
        }
    }

    /// The MM algorithms and Gerchberg-Saxton are monotone and can be accelerated.
    pub fn is_monotone(self) -> bool {
        self != Algorithm::WirtingerFlow
    }

    fn needs_gram_factor(self) -> bool {
        matches!(self, Algorithm::GerchbergSaxton | Algorithm::ModulusSingleTerm)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = PrimeError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == norm)
            .ok_or_else(|| PrimeError::invalid(format!("unknown algorithm '{s}'")))
    }
}

/// How the majorization constant `D` of the power family is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DStrategy {
    /// `D = lambda_max(Phi)`, which makes the lifted surrogate a valid majorizer.
    #[default]
    LambdaMaxPhi,
    /// `D = 1.01 max(lemma2_bound(x), 1e-6 lambda_max(Phi))`, re-evaluated every iteration.
    Lemma2Bound,
    Fixed(f64),
}

/// Step size rule of Wirtinger Flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WfStepRule {
    #[default]
    Heuristic,
    Backtracking,
}

fn default_max_iters() -> usize {
    200
}
fn default_rel_tol() -> f64 {
    1e-10
}
fn default_epsilon_guard() -> f64 {
    1e-12
}
fn default_power_steps() -> usize {
    1
}
fn default_e_initial() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop when `|f_k - f_{k+1}| <= rel_tol (1 + f_k)`.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Inner products with modulus below this get phase 1.
    #[serde(default = "default_epsilon_guard")]
    pub epsilon_guard: f64,
    /// Power steps per power-family update.
    #[serde(default = "default_power_steps")]
    pub power_steps: usize,
    #[serde(default)]
    pub d_strategy: DStrategy,
    #[serde(default)]
    pub wf_step: WfStepRule,
    /// Seed of the backtracking `E`; it doubles before its first use.
    #[serde(default = "default_e_initial")]
    pub e_initial: f64,
    #[serde(default)]
    pub accelerate: bool,
    /// `None` means: scale for Wirtinger Flow only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apply_init_scale: Option<bool>,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            max_iters: default_max_iters(),
            rel_tol: default_rel_tol(),
            epsilon_guard: default_epsilon_guard(),
            power_steps: default_power_steps(),
            d_strategy: DStrategy::default(),
            wf_step: WfStepRule::default(),
            e_initial: default_e_initial(),
            accelerate: false,
            apply_init_scale: None,
        }
    }

    pub fn accelerated(mut self) -> Self {
        self.accelerate = true;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn init_scale_applied(&self) -> bool {
        self.apply_init_scale
            .unwrap_or(self.algorithm == Algorithm::WirtingerFlow)
    }

    /// Short identifier, `-acce` appended for accelerated runs.
    pub fn label(&self) -> String {
        if self.accelerate {
            format!("{}-acce", self.algorithm.id())
        } else {
            self.algorithm.id().to_string()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(PrimeError::invalid("max_iters must be at least 1"));
        }
        if self.rel_tol.is_nan() || self.rel_tol < 0.0 {
            return Err(PrimeError::invalid("rel_tol must be nonnegative"));
        }
        if self.epsilon_guard.is_nan() || self.epsilon_guard <= 0.0 {
            return Err(PrimeError::invalid("epsilon_guard must be positive"));
        }
        if self.power_steps == 0 {
            return Err(PrimeError::invalid("power_steps must be at least 1"));
        }
        if !(self.e_initial.is_finite() && self.e_initial > 0.0) {
            return Err(PrimeError::invalid("e_initial must be positive"));
        }
        if let DStrategy::Fixed(d) = self.d_strategy {
            if !(d.is_finite() && d > 0.0) {
                return Err(PrimeError::invalid("fixed D must be positive"));
            }
        }
        if self.accelerate && !self.algorithm.is_monotone() {
            return Err(PrimeError::invalid(format!("{} cannot be accelerated", self.algorithm)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Converged,
    MaxIters,
    Failed(String),
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Converged => f.write_str("converged"),
            RunStatus::MaxIters => f.write_str("max-iters"),
            RunStatus::Failed(reason) => write!(f, "failed: {reason}"),
        }
    }
}

/// Everything recorded for one solver execution.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub final_x: CVector,
    /// Native objective at iteration 0 (the start point) and after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_used: usize,
    pub status: RunStatus,
    /// Seconds spent in the solve call.
    pub wall_time: f64,
    /// Inner passes per outer iteration (power-backtracking only).
    pub inner_loop_counts: Vec<usize>,
    /// Total number of elementary update evaluations (3 per accelerated iteration).
    pub step_calls: usize,
}

impl SolverRun {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace always holds the start point")
    }
}

fn plain_step(p: &ProblemInstance, cfg: &SolverConfig, x: &CVector, k: usize, inner: &mut usize) -> Result<CVector> {
    match cfg.algorithm {
        Algorithm::WirtingerFlow => step_wirtinger_flow(p, x, cfg, k).map(|s| s.x),
        Algorithm::GerchbergSaxton => step_gerchberg_saxton(p, x, cfg),
        Algorithm::ModulusSingleTerm => step_modulus_single_term(p, x, cfg),
        Algorithm::ModulusBothTerms => step_modulus_both_terms(p, x, cfg),
        Algorithm::Power => step_power(p, x, cfg),
        Algorithm::PowerBacktracking => {
            let s = step_power_backtracking(p, x, cfg)?;
            *inner += s.inner_count;
            Ok(s.x)
        }
    }
}

fn is_finite(x: &CVector) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn prepare(p: &ProblemInstance, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    let ens = p.ensemble();
    if cfg.algorithm.needs_gram_factor() && ens.kind() != EnsembleKind::PartialDft {
        if let Err(e) = ens.gram_factor() {
            return Err(e.clone());
        }
    }
    match cfg.algorithm {
        Algorithm::ModulusBothTerms => {
            lambda_max_gram(ens)?;
        }
        Algorithm::Power | Algorithm::PowerBacktracking => {
            lambda_max_phi(ens)?;
        }
        _ => {}
    }
    Ok(())
}

/// Runs `cfg.algorithm` from the spectral initialization.
pub fn solve(p: &ProblemInstance, cfg: &SolverConfig) -> Result<SolverRun> {
    let start = Instant::now();
    prepare(p, cfg)?;
    let x0 = spectral_init(p, cfg.init_scale_applied())?;
    Ok(iterate(p, cfg, x0, start, &mut |_| {}))
}

/// Like [`solve`], calling `observe` on the start point and on every accepted iterate.
pub fn solve_observed(p: &ProblemInstance, cfg: &SolverConfig, mut observe: impl FnMut(&CVector)) -> Result<SolverRun> {
    let start = Instant::now();
    prepare(p, cfg)?;
    let x0 = spectral_init(p, cfg.init_scale_applied())?;
    Ok(iterate(p, cfg, x0, start, &mut observe))
}

/// Runs `cfg.algorithm` from a caller-supplied start point.
pub fn solve_from(p: &ProblemInstance, cfg: &SolverConfig, x0: &CVector) -> Result<SolverRun> {
    let start = Instant::now();
    prepare(p, cfg)?;
    p.check_signal(x0)?;
    Ok(iterate(p, cfg, x0.clone(), start, &mut |_| {}))
}

fn iterate(
    p: &ProblemInstance,
    cfg: &SolverConfig,
    x0: CVector,
    start: Instant,
    observe: &mut dyn FnMut(&CVector),
) -> SolverRun {
    let family = cfg.algorithm.family();
    let objective = |z: &CVector| family.eval(p, z);
    let mut x = x0;
    let mut f = objective(&x);
    let mut trace = vec![f];
    observe(&x);
    let mut inner_loop_counts = Vec::new();
    let mut step_calls = 0;
    let mut status = RunStatus::MaxIters;
    let mut iterations = 0;

    for k in 0..cfg.max_iters {
        let mut inner = 0;
        let next = if cfg.accelerate {
            accelerated_step(|z| plain_step(p, cfg, z, k, &mut inner), &x, objective).map(|o| {
                step_calls += o.step_calls;
                o.x
            })
        } else {
            step_calls += 1;
            plain_step(p, cfg, &x, k, &mut inner)
        };
        let x_new = match next {
            Ok(z) => z,
            Err(e) => {
                status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let f_new = objective(&x_new);
        if !is_finite(&x_new) || !f_new.is_finite() {
            status = RunStatus::Failed(PrimeError::NonFinite { iteration: k + 1 }.to_string());
            break;
        }
        if cfg.algorithm == Algorithm::PowerBacktracking {
            inner_loop_counts.push(inner);
        }
        iterations += 1;
        trace.push(f_new);
        x = x_new;
        observe(&x);
        let change = (f - f_new).abs();
        let converged = change <= cfg.rel_tol * (1.0 + f);
        f = f_new;
        if converged {
            status = RunStatus::Converged;
            break;
        }
    }

    SolverRun {
        final_x: x,
        objective_trace: trace,
        iterations_used: iterations,
        status,
        wall_time: start.elapsed().as_secs_f64(),
        inner_loop_counts,
        step_calls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_ids_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.id().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!(
            "power_backtracking".parse::<Algorithm>().unwrap(),
            Algorithm::PowerBacktracking
        );
        assert!("gradient".parse::<Algorithm>().is_err());
    }

    #[test]
    fn init_scale_defaults() {
        assert!(SolverConfig::new(Algorithm::WirtingerFlow).init_scale_applied());
        assert!(!SolverConfig::new(Algorithm::Power).init_scale_applied());
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(Algorithm::Power).validate().is_ok());
        assert!(SolverConfig::new(Algorithm::Power)
            .with_max_iters(0)
            .validate()
            .is_err());
        assert!(SolverConfig::new(Algorithm::WirtingerFlow)
            .accelerated()
            .validate()
            .is_err());
        let mut cfg = SolverConfig::new(Algorithm::Power);
        cfg.rel_tol = f64::NAN;
        assert!(cfg.validate().is_err());
        cfg.rel_tol = f64::INFINITY;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn labels() {
        assert_eq!(SolverConfig::new(Algorithm::Power).accelerated().label(), "power-acce");
        assert_eq!(
            SolverConfig::new(Algorithm::GerchbergSaxton).label(),
            "gerchberg-saxton"
        );
    }
}
