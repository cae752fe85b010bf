//! Updates for the squared objective `sum_i (y_i - |a_i^H x|^2)^2` via the
//! lifted majorizer with constant `D >= lambda_max(Phi)`.
//!
//! `X = x x^H` is never formed: `Tr(X A_i) = |a_i^H x|^2` and `W` is built
//! directly from `x` at `O(N K^2)`.

use crate::error::{PrimeError, Result};
use crate::linalg::{lambda_max_phi, power_iteration, HermitianMatrix};
use crate::problem::{objective_squared, ProblemInstance};
use crate::solvers::{DStrategy, SolverConfig};
use crate::{CVector, Complex64};

/// Cap on inner passes of the backtracking loop (`E` doubles every pass).
pub const MAX_BACKTRACKING_PASSES: usize = 60;

/// Relative rounding allowance for the `g >= f` acceptance test.
const ACCEPT_ROUNDING: f64 = 1e-13;

/// `W = x x^H + (B - sum_i |a_i^H x|^2 a_i a_i^H) / D`.
pub fn build_w(p: &ProblemInstance, x: &CVector, d: f64) -> Result<HermitianMatrix> {
    p.check_signal(x)?;
    if !(d.is_finite() && d > 0.0) {
        return Err(PrimeError::invalid(format!(
            "majorization constant D must be positive, got {d}"
        )));
    }
    let a = p.ensemble().matrix();
    let proj = p.ensemble().project(x);
    let mut scaled = a.clone();
    for (mut col, z) in scaled.column_iter_mut().zip(proj.iter()) {
        col *= Complex64::new(z.norm_sqr(), 0.0);
    }
    let fitted = scaled * a.adjoint();
    let w = x * x.adjoint() + (p.weighted_covariance().as_matrix() - fitted).unscale(d);
    Ok(HermitianMatrix::symmetrized(w))
}

/// Right-hand side of the sufficient condition `lambda_max(W) > |lambda_min(W)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Bound {
    /// `raw` clamped at 0.
    pub value: f64,
    pub raw: f64,
    /// Indices with `y_i < |a_i^H x|^2`.
    pub violation_set: Vec<usize>,
}

/// `sum_{i in I} (|a_i^H x|^2 - y_i) ||a_i||^2 / ||x||^2 + sum_i (|a_i^H x|^2 - y_i) |a_i^H x|^2 / ||x||^4`.
pub fn lemma2_bound(p: &ProblemInstance, x: &CVector) -> Result<Lemma2Bound> {
    p.check_signal(x)?;
    let xn2 = x.norm_squared();
    if xn2 == 0.0 {
        return Err(PrimeError::invalid("lemma2_bound needs a nonzero iterate"));
    }
    let proj = p.ensemble().project(x);
    let col_norms = p.ensemble().column_norms_sqr();
    let mut violation_set = Vec::new();
    let mut over = 0.0;
    let mut all = 0.0;
    for (i, (z, &y)) in proj.iter().zip(p.y()).enumerate() {
        let fit = z.norm_sqr();
        let excess = fit - y;
        if y < fit {
            violation_set.push(i);
            over += excess * col_norms[i];
        }
        all += excess * fit;
    }
    let raw = over / xn2 + all / (xn2 * xn2);
    Ok(Lemma2Bound {
        value: raw.max(0.0),
        raw,
        violation_set,
    })
}

/// Resolves the majorization constant for the iterate `x`.
pub fn resolve_d(p: &ProblemInstance, x: &CVector, strategy: DStrategy) -> Result<f64> {
    match strategy {
        DStrategy::LambdaMaxPhi => lambda_max_phi(p.ensemble()),
        DStrategy::Lemma2Bound => {
            let floor = lambda_max_phi(p.ensemble())? * 1e-6;
            Ok(1.01 * lemma2_bound(p, x)?.value.max(floor))
        }
        DStrategy::Fixed(d) => Ok(d),
    }
}

fn unit_or_ones(x: &CVector) -> CVector {
    let n = x.norm();
    if n > 0.0 {
        x.unscale(n)
    } else {
        let k = x.len();
        CVector::from_element(k, Complex64::new(1.0 / (k as f64).sqrt(), 0.0))
    }
}

/// One power-family update `x+ = sqrt(max(0, rho)) u`, where `(rho, u)` comes
/// from `cfg.power_steps` power steps on `W` warm-started at `x / ||x||`.
pub fn step_power(p: &ProblemInstance, x: &CVector, cfg: &SolverConfig) -> Result<CVector> {
    let d = resolve_d(p, x, cfg.d_strategy)?;
    let w = build_w(p, x, d)?;
    let pair = power_iteration(&w, cfg.power_steps, &unit_or_ones(x))?;
    if pair.value <= 0.0 {
        return Ok(CVector::zeros(x.len()));
    }
    Ok(pair.vector * Complex64::new(pair.value.sqrt(), 0.0))
}

/// Outcome of one backtracking update.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktrackingStep {
    pub x: CVector,
    /// Number of inner passes, i.e. how many values of `E` were tried.
    pub inner_count: usize,
    /// The accepted `E`.
    pub e: f64,
    /// `t = max(0, x~^H W x~)`.
    pub t: f64,
    /// Unit direction `x~ = d / ||d||`.
    pub x_tilde: CVector,
    /// `d = (W + E I) x~_k`.
    pub direction: CVector,
}

struct PowerSurrogate<'a> {
    p: &'a ProblemInstance,
    w: &'a HermitianMatrix,
    anchor: &'a CVector,
    anchor_norm: f64,
    d: f64,
    // D ||x_k||^4 - sum |a_i^H x_k|^4 + sum y_i^2
    constant: f64,
    constant_mag: f64,
}

impl<'a> PowerSurrogate<'a> {
    fn new(p: &'a ProblemInstance, w: &'a HermitianMatrix, anchor: &'a CVector, d: f64) -> Self {
        let anchor_norm = anchor.norm();
        let quartic: f64 = p.ensemble().project(anchor).iter().map(|z| z.norm_sqr().powi(2)).sum();
        let y_sq: f64 = p.y().iter().map(|y| y * y).sum();
        let dx4 = d * anchor_norm.powi(4);
        PowerSurrogate {
            p,
            w,
            anchor,
            anchor_norm,
            d,
            constant: dx4 - quartic + y_sq,
            constant_mag: dx4 + quartic + y_sq,
        }
    }

    /// Returns `(g, sum of |terms|)`.
    fn eval(&self, x: &CVector, e: f64) -> (f64, f64) {
        let d = self.d;
        let xn = x.norm();
        let xn2 = xn * xn;
        let shifted_anchor = self.w.apply_shifted(self.anchor, e);
        let cross = x.dotc(&shifted_anchor).re;
        let anchor_form = self.anchor.dotc(&shifted_anchor).re;
        let ak2 = self.anchor_norm * self.anchor_norm;
        let terms = [
            d * xn2 * xn2,
            2.0 * d * e * xn2,
            -4.0 * d * (xn / self.anchor_norm) * cross,
            2.0 * d * (xn2 / ak2) * anchor_form,
        ];
        let value = terms.iter().sum::<f64>() + self.constant;
        let mag = terms.iter().map(|t| t.abs()).sum::<f64>() + self.constant_mag;
        (value, mag)
    }

    fn dominates(&self, x: &CVector, e: f64) -> bool {
        let (g, g_mag) = self.eval(x, e);
        let f = objective_squared(self.p, x);
        let y_sq: f64 = self.p.y().iter().map(|y| y * y).sum();
        g >= f - ACCEPT_ROUNDING * (g_mag + f + y_sq)
    }
}

/// Double-majorization update: minimizes the linearized surrogate on the unit
/// sphere (`x~ = d / ||d||`), picks `t = max(0, x~^H W x~)`, and doubles `E`
/// until the combined surrogate dominates the objective at the candidate.
pub fn step_power_backtracking(p: &ProblemInstance, x: &CVector, cfg: &SolverConfig) -> Result<BacktrackingStep> {
    p.check_signal(x)?;
    let norm = x.norm();
    if norm == 0.0 {
        return Err(PrimeError::invalid("backtracking step needs a nonzero iterate"));
    }
    let d = resolve_d(p, x, cfg.d_strategy)?;
    let w = build_w(p, x, d)?;
    let surrogate = PowerSurrogate::new(p, &w, x, d);
    let x_unit = x.unscale(norm);
    let mut e = cfg.e_initial;
    for pass in 1..=MAX_BACKTRACKING_PASSES {
        e *= 2.0;
        let direction = w.apply_shifted(&x_unit, e);
        let dn = direction.norm();
        if dn == 0.0 || !dn.is_finite() {
            continue;
        }
        let x_tilde = direction.unscale(dn);
        let t = w.quadratic_form(&x_tilde).max(0.0);
        let candidate = &x_tilde * Complex64::new(t.sqrt(), 0.0);
        if surrogate.dominates(&candidate, e) {
            return Ok(BacktrackingStep {
                x: candidate,
                inner_count: pass,
                e,
                t,
                x_tilde,
                direction,
            });
        }
    }
    Err(PrimeError::BacktrackingDiverged {
        passes: MAX_BACKTRACKING_PASSES,
    })
}

/// The combined surrogate `g(x | x_k)` of the backtracking update, with `W`
/// built at the anchor `x_k` using `d`.
pub fn eval_majorizer_power(p: &ProblemInstance, candidate: &CVector, anchor: &CVector, d: f64, e: f64) -> Result<f64> {
    p.check_signal(candidate)?;
    if anchor.norm() == 0.0 {
        return Err(PrimeError::invalid("majorizer anchor must be nonzero"));
    }
    let w = build_w(p, anchor, d)?;
    Ok(PowerSurrogate::new(p, &w, anchor, d).eval(candidate, e).0)
}
