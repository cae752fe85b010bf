//! Quick invariant checks runnable from the command line.
//!
//! Each check uses an independent oracle: dense Hermitian eigensolvers for
//! spectral quantities, central differences for the gradient, direct objective
//! evaluation for descent and majorization.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{lambda_max_gram, lambda_max_phi, phi_matvec, vectorize, HermitianMatrix};
use crate::problem::{
    complex_gaussian_vector, gen_dft_ensemble, gen_gaussian_ensemble, gradient_squared, objective_squared,
    MeasurementEnsemble, ProblemInstance,
};
use crate::solvers::{
    build_w, eval_majorizer_modulus, eval_majorizer_power, lemma2_bound, solve, step_gerchberg_saxton,
    step_modulus_single_term, Algorithm, SolverConfig,
};
use crate::{CMatrix, CVector, Complex64, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub checks: Vec<SelftestCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn dense_max_eig(m: &CMatrix) -> f64 {
    m.clone().symmetric_eigenvalues().max()
}

fn dense_phi(a: &MeasurementEnsemble) -> Result<CMatrix> {
    let k = a.k();
    let mut out = CMatrix::zeros(k * k, k * k);
    for col in 0..k * k {
        let mut e = CMatrix::zeros(k, k);
        e[(col % k, col / k)] = Complex64::new(1.0, 0.0);
        // Phi is linear, so Hermitian parts of the unit basis suffice for its columns.
        let sym = HermitianMatrix::symmetrized(e.clone() + e.adjoint());
        let anti = HermitianMatrix::symmetrized((e.clone() - e.adjoint()) * Complex64::new(0.0, 1.0));
        let image = (phi_matvec(a, &sym)?.into_inner() - phi_matvec(a, &anti)?.into_inner() * Complex64::new(0.0, 1.0))
            .unscale(2.0);
        out.set_column(col, &vectorize(&image));
    }
    Ok(out)
}

fn instance(k: usize, n: usize, seed: u64, noise: f64) -> Result<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    let ens = Arc::new(gen_gaussian_ensemble(k, n, seed)?);
    let x = complex_gaussian_vector(k, &mut rng);
    ProblemInstance::synthesize(ens, x, noise, seed.wrapping_add(1))
}

fn check_spectral() -> Result<SelftestCheck> {
    let mut worst = 0.0f64;
    let mut exact = true;
    for k in 1..=4 {
        for n in k..=8 {
            let e = gen_dft_ensemble(k, n)?;
            exact &= lambda_max_gram(&e)? == n as f64 && lambda_max_phi(&e)? == (n * k) as f64;
            let dense = dense_max_eig(&dense_phi(&e)?);
            worst = worst.max((dense - (n * k) as f64).abs() / (n * k) as f64);
        }
        let g = gen_gaussian_ensemble(k, 4 * k, 11 + k as u64)?;
        let gram = g.matrix() * g.matrix().adjoint();
        worst = worst.max((lambda_max_gram(&g)? - dense_max_eig(&gram)).abs() / dense_max_eig(&gram));
        let phi = dense_max_eig(&dense_phi(&g)?);
        worst = worst.max((lambda_max_phi(&g)? - phi).abs() / phi);
    }
    Ok(SelftestCheck {
        name: "spectral identities",
        passed: exact && worst < 1e-8,
        detail: format!("DFT exact: {exact}, worst relative deviation from dense oracle {worst:.2e}"),
    })
}

fn check_gradient() -> Result<SelftestCheck> {
    let mut worst = 0.0f64;
    for s in 0..10 {
        let p = instance(5, 20, 100 + s, 0.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x = complex_gaussian_vector(5, &mut rng);
        let g = gradient_squared(&p, &x);
        let h = 1e-5;
        let mut fd = CVector::zeros(5);
        for j in 0..5 {
            for (unit, part) in [(Complex64::new(1.0, 0.0), 0), (Complex64::new(0.0, 1.0), 1)] {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += unit * h;
                xm[j] -= unit * h;
                let d = (objective_squared(&p, &xp) - objective_squared(&p, &xm)) / (2.0 * h);
                if part == 0 {
                    fd[j].re = d;
                } else {
                    fd[j].im = d;
                }
            }
        }
        worst = worst.max((&g - &fd).norm() / g.norm());
    }
    Ok(SelftestCheck {
        name: "gradient vs central differences",
        passed: worst < 1e-6,
        detail: format!("worst relative error {worst:.2e}"),
    })
}

fn check_descent() -> Result<SelftestCheck> {
    let algs = [
        Algorithm::GerchbergSaxton,
        Algorithm::ModulusSingleTerm,
        Algorithm::ModulusBothTerms,
        Algorithm::Power,
        Algorithm::PowerBacktracking,
    ];
    let mut violations = 0;
    let mut runs = 0;
    for s in 0..4 {
        for noise in [0.0, 1e-4] {
            let p = instance(6, 30, 200 + s, noise)?;
            for alg in algs {
                let run = solve(&p, &SolverConfig::new(alg).with_max_iters(40))?;
                runs += 1;
                violations += run
                    .objective_trace
                    .windows(2)
                    .filter(|w| w[1] > w[0] + 1e-10 * (1.0 + w[0].abs()))
                    .count();
            }
        }
    }
    Ok(SelftestCheck {
        name: "monotone descent",
        passed: violations == 0,
        detail: format!("{violations} increases over {runs} runs"),
    })
}

fn check_equivalence() -> Result<SelftestCheck> {
    let mut worst = 0.0f64;
    for s in 0..3 {
        let p = instance(5, 25, 300 + s, 0.0)?;
        let cfg = SolverConfig::new(Algorithm::GerchbergSaxton);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut a = complex_gaussian_vector(5, &mut rng);
        let mut b = a.clone();
        for _ in 0..30 {
            a = step_gerchberg_saxton(&p, &a, &cfg)?;
            b = step_modulus_single_term(&p, &b, &cfg)?;
            worst = worst.max((&a - &b).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    Ok(SelftestCheck {
        name: "single-term equals Gerchberg-Saxton",
        passed: worst <= 1e-12,
        detail: format!("largest entry gap {worst:.2e}"),
    })
}

fn check_majorizers() -> Result<SelftestCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst_tangent = 0.0f64;
    let mut worst_gap = 0.0f64;
    for s in 0..50 {
        let p = instance(4, 16, 400 + s, 1e-4)?;
        let anchor = complex_gaussian_vector(4, &mut rng);
        let cand = complex_gaussian_vector(4, &mut rng) * Complex64::new(rng.random_range(0.1..2.0), 0.0);
        let d = lambda_max_phi(p.ensemble())?;
        let e = rng.random_range(0.5..8.0);
        let f_anchor = objective_squared(&p, &anchor);
        let g_anchor = eval_majorizer_power(&p, &anchor, &anchor, d, e)?;
        worst_tangent = worst_tangent.max((g_anchor - f_anchor).abs() / (1.0 + f_anchor));
        worst_gap = worst_gap.max(objective_squared(&p, &cand) - eval_majorizer_power(&p, &cand, &anchor, d, e)?);
        let fm = crate::problem::objective_modulus(&p, &anchor);
        worst_tangent =
            worst_tangent.max((eval_majorizer_modulus(&p, &anchor, &anchor, 1e-12) - fm).abs() / (1.0 + fm));
        worst_gap = worst_gap
            .max(crate::problem::objective_modulus(&p, &cand) - eval_majorizer_modulus(&p, &cand, &anchor, 1e-12));
    }
    Ok(SelftestCheck {
        name: "majorizer tangency and domination",
        passed: worst_tangent <= 1e-9 && worst_gap <= 1e-9,
        detail: format!("tangency {worst_tangent:.2e}, largest f - g {worst_gap:.2e}"),
    })
}

fn check_dominance() -> Result<SelftestCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut failures = 0;
    for s in 0..20 {
        let k = 2 + (s as usize % 5);
        let p = instance(k, 4 * k, 500 + s, 1e-3)?;
        let x = complex_gaussian_vector(k, &mut rng);
        let d = 1.01 * lemma2_bound(&p, &x)?.value.max(1e-9);
        let eig = build_w(&p, &x, d)?.into_inner().symmetric_eigenvalues();
        if eig.max() <= eig.min().abs() {
            failures += 1;
        }
    }
    Ok(SelftestCheck {
        name: "dominant eigenvalue under the D bound",
        passed: failures == 0,
        detail: format!("{failures} of 20 instances violate lambda_max > |lambda_min|"),
    })
}

type Check = fn() -> Result<SelftestCheck>;

/// Runs all checks; takes a few seconds.
pub fn run_selftest() -> SelftestReport {
    let checks: [(&'static str, Check); 6] = [
        ("spectral identities", check_spectral),
        ("gradient vs central differences", check_gradient),
        ("monotone descent", check_descent),
        ("single-term equals Gerchberg-Saxton", check_equivalence),
        ("majorizer tangency and domination", check_majorizers),
        ("dominant eigenvalue under the D bound", check_dominance),
    ];
    let checks = checks
        .into_iter()
        .map(|(name, run)| {
            run().unwrap_or_else(|e| SelftestCheck {
                name,
                passed: false,
                detail: format!("error: {e}"),
            })
        })
        .collect();
    SelftestReport { checks }
}
