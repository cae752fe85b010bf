//! Squared extrapolation for monotone fixed-point maps.
//!
//! Two plain steps `x1 = F(x)`, `x2 = F(x1)` give `r = x1 - x` and
//! `v = x2 - x1 - r`. With `alpha = min(-||r|| / ||v||, -1)` the extrapolated
//! point `x' = x - 2 alpha r + alpha^2 v` is stabilized by one more step
//! `x'' = F(x')`, and kept only if it does not increase the objective.

use crate::error::Result;
use crate::CVector;

/// The points of one extrapolation cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelState {
    pub base_point: CVector,
    pub first_step: CVector,
    pub second_step: CVector,
    /// Clamped step length, `None` when `v = 0` and no extrapolation was attempted.
    pub steplength_alpha: Option<f64>,
}

impl AccelState {
    /// `r = x1 - x`.
    pub fn r(&self) -> CVector {
        &self.first_step - &self.base_point
    }

    /// `v = x2 - 2 x1 + x`.
    pub fn v(&self) -> CVector {
        &self.second_step - &self.first_step - self.r()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelOutcome {
    pub x: CVector,
    pub state: AccelState,
    /// `x''` was accepted; otherwise `x` is the two-step point `x2`.
    pub used_extrapolation: bool,
    /// Number of calls to the step map (2 or 3).
    pub step_calls: usize,
}

/// `alpha = -||r|| / ||v||` clamped to at most `-1`.
pub fn step_length(r: &CVector, v: &CVector) -> Option<f64> {
    let vn = v.norm();
    if vn == 0.0 || !vn.is_finite() {
        return None;
    }
    Some((-r.norm() / vn).min(-1.0))
}

/// One safeguarded extrapolation cycle from `x`.
///
/// Errors from the first two steps are returned. If the step map fails at the
/// extrapolated point, the cycle falls back to `x2` like a rejected candidate.
pub fn accelerated_step<F, G>(mut step: F, x: &CVector, objective: G) -> Result<AccelOutcome>
where
    F: FnMut(&CVector) -> Result<CVector>,
    G: Fn(&CVector) -> f64,
{
    let x1 = step(x)?;
    let x2 = step(&x1)?;
    let r = &x1 - x;
    let v = &x2 - &x1 - &r;
    let alpha = step_length(&r, &v);
    let state = AccelState {
        base_point: x.clone(),
        first_step: x1,
        second_step: x2,
        steplength_alpha: alpha,
    };
    let Some(alpha) = alpha else {
        return Ok(AccelOutcome {
            x: state.second_step.clone(),
            state,
            used_extrapolation: false,
            step_calls: 2,
        });
    };
    let extrapolated = x - r.scale(2.0 * alpha) + v.scale(alpha * alpha);
    if let Ok(x3) = step(&extrapolated) {
        let f3 = objective(&x3);
        if f3.is_finite() && f3 <= objective(x) {
            return Ok(AccelOutcome {
                x: x3,
                state,
                used_extrapolation: true,
                step_calls: 3,
            });
        }
    }
    Ok(AccelOutcome {
        x: state.second_step.clone(),
        state,
        used_extrapolation: false,
        step_calls: 3,
    })
}
