//! Phase retrieval by majorization-minimization.
//!
//! The crate recovers a complex signal `x` of length `K` from `N` intensity
//! measurements `y_i = |a_i^H x|^2 + n_i`. It provides the four MM solvers
//! (modulus single-term, modulus both-terms, power, power-backtracking), the
//! Wirtinger Flow and Gerchberg-Saxton baselines, a safeguarded squared
//! extrapolation wrapper, recovery metrics, and a seeded Monte Carlo harness.
//!
//! Module map:
//!
//! * [`linalg`]: dense Hermitian kernels (power iteration, Gram solves, the
//!   lifted operator applied matrix-free).
//! * [`problem`]: measurement ensembles, synthesis, objectives, gradient and
//!   spectral initialization.
//! * [`solvers`]: the six iterative algorithms behind [`solvers::solve`].
//! * [`accel`]: the squared-extrapolation step.
//! * [`metrics`]: phase alignment, autocorrelation and success rules.
//! * [`bench`]: experiment specs, trial runner, CSV output and self test.

pub mod accel;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod problem;
pub mod solvers;

pub use error::{PrimeError, Result};
pub use num_complex::Complex64;

/// Complex column vector used for signals and every iterate.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
