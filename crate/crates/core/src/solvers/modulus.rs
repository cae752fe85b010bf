//! Updates for the modulus objective `sum_i (sqrt(y_i) - |a_i^H x|)^2`.

use crate::error::Result;
use crate::linalg::{gram_solve, lambda_max_gram};
use crate::problem::ProblemInstance;
use crate::solvers::SolverConfig;
use crate::{CVector, Complex64};

/// `z / |z|`, or `1` when `|z| < eps`.
pub fn guarded_phase(z: Complex64, eps: f64) -> Complex64 {
    let r = z.norm();
    if r < eps {
        Complex64::new(1.0, 0.0)
    } else {
        z / r
    }
}

/// Diagonal of the phase matrix `C = Diag(exp(j arg(A^H x)))`, unit modulus entries.
pub fn phase_factors(p: &ProblemInstance, x: &CVector, eps: f64) -> CVector {
    p.ensemble().project(x).map(|z| {
        if z.norm() < eps {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, z.arg())
        }
    })
}

/// Gerchberg-Saxton: fix the phases of `A^H x`, then solve the least-squares
/// problem `min ||A^H x - C sqrt(y)||^2`.
pub fn step_gerchberg_saxton(p: &ProblemInstance, x: &CVector, cfg: &SolverConfig) -> Result<CVector> {
    p.check_signal(x)?;
    let c = phase_factors(p, x, cfg.epsilon_guard);
    let rhs = c.component_mul(p.sqrt_y());
    gram_solve(p.ensemble(), &rhs)
}

/// Single-term MM update: majorize only `-2 sqrt(y_i) |a_i^H x|` by Cauchy-Schwarz
/// and minimize `sum_i |a_i^H x - c_i|^2` with `c_i = sqrt(y_i) a_i^H x_k / |a_i^H x_k|`.
///
/// Computes the same map as [`step_gerchberg_saxton`] by a different route.
pub fn step_modulus_single_term(p: &ProblemInstance, x: &CVector, cfg: &SolverConfig) -> Result<CVector> {
    p.check_signal(x)?;
    let targets = CVector::from_iterator(
        p.n(),
        p.ensemble()
            .project(x)
            .iter()
            .zip(p.y())
            .map(|(&z, &y)| guarded_phase(z, cfg.epsilon_guard) * y.sqrt()),
    );
    gram_solve(p.ensemble(), &targets)
}

/// Both-terms MM update with step size `1 / lambda_max(A A^H)`:
/// `x + (A c - A A^H x) / lambda_max`, `c_i = sqrt(y_i) phase(a_i^H x)`.
pub fn step_modulus_both_terms(p: &ProblemInstance, x: &CVector, cfg: &SolverConfig) -> Result<CVector> {
    p.check_signal(x)?;
    let lambda = lambda_max_gram(p.ensemble())?;
    let a = p.ensemble().matrix();
    let proj = p.ensemble().project(x);
    let residual = CVector::from_iterator(
        p.n(),
        proj.iter()
            .zip(p.y())
            .map(|(&z, &y)| guarded_phase(z, cfg.epsilon_guard) * y.sqrt() - z),
    );
    Ok(x + (a * residual).unscale(lambda))
}

/// Cauchy-Schwarz surrogate of the modulus objective at `anchor`, constant
/// `sum_i y_i` included so it is directly comparable with `objective_modulus`.
pub fn eval_majorizer_modulus(p: &ProblemInstance, candidate: &CVector, anchor: &CVector, eps: f64) -> f64 {
    let cand = p.ensemble().project(candidate);
    let anch = p.ensemble().project(anchor);
    cand.iter()
        .zip(anch.iter())
        .zip(p.y())
        .map(|((&z, &zk), &y)| {
            let phase = guarded_phase(zk, eps);
            z.norm_sqr() - 2.0 * y.sqrt() * (z * phase.conj()).re + y
        })
        .sum()
}
