//! Wirtinger Flow baseline: gradient descent on the squared objective.

use crate::error::Result;
use crate::problem::{gradient_squared, objective_squared, InitScale, ProblemInstance};
use crate::solvers::{SolverConfig, WfStepRule};
use crate::{CVector, Complex64};

/// Maximum number of step halvings in backtracking mode.
pub const MAX_HALVINGS: usize = 50;

/// Heuristic step `mu_{k+1} = lambda^2 min(1 - exp(-(k + 1) / 330), 0.4)` for iteration `k`.
pub fn heuristic_step(lambda_sq: f64, k: usize) -> f64 {
    lambda_sq * (1.0 - (-((k + 1) as f64) / 330.0).exp()).min(0.4)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerStep {
    pub x: CVector,
    /// Step size actually taken (0 when stalled or stationary).
    pub mu: f64,
    /// Backtracking ran out of halvings; `x` is the input iterate.
    pub stalled: bool,
}

/// One Wirtinger Flow update at iteration index `k`.
///
/// In backtracking mode the heuristic step is halved until the Armijo condition
/// `f(x - mu g) <= f(x) - (mu / 2) ||g||^2` holds.
pub fn step_wirtinger_flow(p: &ProblemInstance, x: &CVector, cfg: &SolverConfig, k: usize) -> Result<WirtingerStep> {
    p.check_signal(x)?;
    let grad = gradient_squared(p, x);
    let g2 = grad.norm_squared();
    if g2 == 0.0 {
        return Ok(WirtingerStep {
            x: x.clone(),
            mu: 0.0,
            stalled: false,
        });
    }
    let mut mu = heuristic_step(InitScale::from_problem(p).lambda_sq(), k);
    let step = |mu: f64| x - &grad * Complex64::new(mu, 0.0);
    match cfg.wf_step {
        WfStepRule::Heuristic => Ok(WirtingerStep {
            x: step(mu),
            mu,
            stalled: false,
        }),
        WfStepRule::Backtracking => {
            let f0 = objective_squared(p, x);
            for _ in 0..=MAX_HALVINGS {
                let candidate = step(mu);
                if objective_squared(p, &candidate) <= f0 - 0.5 * mu * g2 {
                    return Ok(WirtingerStep {
                        x: candidate,
                        mu,
                        stalled: false,
                    });
                }
                mu *= 0.5;
            }
            Ok(WirtingerStep {
                x: x.clone(),
                mu: 0.0,
                stalled: true,
            })
        }
    }
}
