//! Dense complex kernels shared by the solvers.
//!
//! Everything here works on small dense matrices (`K` in the tens). The lifted
//! operator `Phi = sum_i vec(a_i a_i^H) vec(a_i a_i^H)^H` is `K^2 x K^2` and is
//! only ever applied through [`phi_matvec`], at `O(N K^2)` per product.

use nalgebra::{Cholesky, Dyn};

use crate::error::{PrimeError, Result};
use crate::problem::{EnsembleKind, MeasurementEnsemble};
use crate::{CMatrix, CVector, Complex64};

/// Absolute tolerance for the Hermitian symmetry check in [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Convergence tolerance used for the cached spectral constants.
pub const SPECTRAL_TOL: f64 = 1e-10;

/// Step cap used for the cached spectral constants and spectral initialization.
pub const SPECTRAL_MAX_STEPS: usize = 20_000;

/// Relative pivot floor of the Gram factorization: `pivot < 1e-12 * trace / K` is singular.
pub const GRAM_PIVOT_FLOOR: f64 = 1e-12;

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates squareness and symmetry (within [`HERMITIAN_TOL`], absolute).
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(PrimeError::invalid(format!(
                "Hermitian matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let k = m.nrows();
        for i in 0..k {
            for j in i..k {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(PrimeError::invalid(format!("matrix is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(HermitianMatrix(m))
    }

    /// Returns `(m + m^H) / 2`, which is Hermitian to the last bit.
    pub fn symmetrized(m: CMatrix) -> Self {
        assert!(m.is_square(), "symmetrized requires a square matrix");
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        HermitianMatrix(h)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = CVector::from_iterator(diag.len(), diag.iter().map(|&v| Complex64::new(v, 0.0)));
        HermitianMatrix(CMatrix::from_diagonal(&d))
    }

    pub fn identity(k: usize) -> Self {
        HermitianMatrix(CMatrix::identity(k, k))
    }

    pub fn zeros(k: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(k, k))
    }

    /// The rank-one matrix `x x^H`.
    pub fn rank_one(x: &CVector) -> Self {
        HermitianMatrix(x * x.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// `(M + shift I) v`.
    pub fn apply_shifted(&self, v: &CVector, shift: f64) -> CVector {
        &self.0 * v + v * Complex64::new(shift, 0.0)
    }

    /// `Re(v^H M v)`; the imaginary part is rounding noise for a Hermitian `M`.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        v.dotc(&(&self.0 * v)).re
    }
}

/// Anything that can be applied to a vector as a Hermitian linear map.
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &CVector) -> CVector;
}

impl HermitianOperator for HermitianMatrix {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, v: &CVector) -> CVector {
        &self.0 * v
    }
}

/// An eigenvalue estimate with a unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPair {
    pub value: f64,
    pub vector: CVector,
}

/// Result of [`leading_eigpair`]: the pair plus convergence bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EigEstimate {
    pub pair: EigPair,
    pub steps: usize,
    pub converged: bool,
}

fn check_start<M: HermitianOperator + ?Sized>(m: &M, start: &CVector) -> Result<CVector> {
    if start.len() != m.dim() {
        return Err(PrimeError::invalid(format!(
            "start vector has length {}, operator dimension is {}",
            start.len(),
            m.dim()
        )));
    }
    let norm = start.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(PrimeError::invalid(
            "power iteration start vector must be nonzero and finite",
        ));
    }
    Ok(start.unscale(norm))
}

/// Applies `m` to `start` exactly `steps` times with normalization and returns
/// the Rayleigh quotient `u^H M u` at the final unit vector `u`.
pub fn power_iteration<M: HermitianOperator + ?Sized>(m: &M, steps: usize, start: &CVector) -> Result<EigPair> {
    if steps == 0 {
        return Err(PrimeError::invalid("power iteration needs at least one step"));
    }
    let mut v = check_start(m, start)?;
    let mut mv = m.apply(&v);
    for step in 1..=steps {
        let norm = mv.norm();
        if norm == 0.0 {
            return Err(PrimeError::DegenerateMatrix { step });
        }
        v = mv.unscale(norm);
        mv = m.apply(&v);
    }
    Ok(EigPair {
        value: v.dotc(&mv).re,
        vector: v,
    })
}

/// Iterated power method from the normalized all-ones vector.
///
/// Stops once both the change of the Rayleigh quotient and the eigen-residual
/// `||M u - rho u||` fall below `tol * |rho|`. Hitting `max_steps` is reported
/// through [`EigEstimate::converged`], not as an error.
pub fn leading_eigpair<M: HermitianOperator + ?Sized>(m: &M, tol: f64, max_steps: usize) -> Result<EigEstimate> {
    let ones = CVector::from_element(m.dim(), Complex64::new(1.0, 0.0));
    leading_eigpair_from(m, &ones, tol, max_steps)
}

/// [`leading_eigpair`] with an explicit (warm) start vector.
pub fn leading_eigpair_from<M: HermitianOperator + ?Sized>(
    m: &M,
    start: &CVector,
    tol: f64,
    max_steps: usize,
) -> Result<EigEstimate> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(PrimeError::invalid("leading_eigpair tolerance must be positive"));
    }
    if max_steps == 0 {
        return Err(PrimeError::invalid("leading_eigpair needs max_steps >= 1"));
    }
    let mut v = check_start(m, start)?;
    let mut mv = m.apply(&v);
    let mut prev_rho: Option<f64> = None;
    let mut rho = 0.0;
    for step in 1..=max_steps {
        let norm = mv.norm();
        if norm == 0.0 {
            return Err(PrimeError::DegenerateMatrix { step });
        }
        v = mv.unscale(norm);
        mv = m.apply(&v);
        rho = v.dotc(&mv).re;
        let scale = rho.abs().max(f64::MIN_POSITIVE);
        let residual = (&mv - &v * Complex64::new(rho, 0.0)).norm();
        let settled = prev_rho.is_some_and(|p| (rho - p).abs() <= tol * scale);
        if settled && residual <= tol * scale {
            return Ok(EigEstimate {
                pair: EigPair { value: rho, vector: v },
                steps: step,
                converged: true,
            });
        }
        prev_rho = Some(rho);
    }
    Ok(EigEstimate {
        pair: EigPair { value: rho, vector: v },
        steps: max_steps,
        converged: false,
    })
}

pub(crate) type GramFactor = std::result::Result<Cholesky<Complex64, Dyn>, PrimeError>;

pub(crate) fn factor_gram(matrix: &CMatrix) -> GramFactor {
    let k = matrix.nrows();
    let gram = matrix * matrix.adjoint();
    let trace: f64 = (0..k).map(|i| gram[(i, i)].re).sum();
    let threshold = GRAM_PIVOT_FLOOR * trace / k as f64;
    let chol = Cholesky::new(gram).ok_or(PrimeError::SingularGram { pivot: 0.0, threshold })?;
    let l = chol.l_dirty();
    let pivot = (0..k).map(|i| l[(i, i)].norm_sqr()).fold(f64::INFINITY, f64::min);
    if pivot.is_nan() || pivot < threshold || threshold == 0.0 {
        return Err(PrimeError::SingularGram { pivot, threshold });
    }
    Ok(chol)
}

/// Least-squares solve `x = (A A^H)^{-1} A b`, the minimizer of `||A^H x - b||^2`.
///
/// For partial DFT ensembles `A A^H = N I`, so this is `A b / N`. Otherwise the
/// Cholesky factor of `A A^H` is computed on first use and cached on the ensemble.
pub fn gram_solve(a: &MeasurementEnsemble, b: &CVector) -> Result<CVector> {
    if b.len() != a.n() {
        return Err(PrimeError::invalid(format!(
            "gram_solve: right-hand side has length {}, ensemble has N = {}",
            b.len(),
            a.n()
        )));
    }
    let ab = a.matrix() * b;
    match a.kind() {
        EnsembleKind::PartialDft => Ok(ab.unscale(a.n() as f64)),
        _ => {
            let chol = a.gram_factor().as_ref().map_err(Clone::clone)?;
            Ok(chol.solve(&ab))
        }
    }
}

/// Leading eigenvalue of `A A^H`: exactly `N` for partial DFT, power method otherwise.
pub fn lambda_max_gram(a: &MeasurementEnsemble) -> Result<f64> {
    if let Some(&v) = a.cache().lambda_gram.get() {
        return Ok(v);
    }
    let value = match a.kind() {
        EnsembleKind::PartialDft => a.n() as f64,
        _ => {
            let gram = HermitianMatrix::symmetrized(a.matrix() * a.matrix().adjoint());
            leading_eigpair(&gram, SPECTRAL_TOL, SPECTRAL_MAX_STEPS)?.pair.value
        }
    };
    Ok(*a.cache().lambda_gram.get_or_init(|| value))
}

/// Leading eigenvalue of the lifted operator `Phi`: exactly `N K` for partial
/// DFT, otherwise the matrix-free power method started at `vec(I_K)`.
pub fn lambda_max_phi(a: &MeasurementEnsemble) -> Result<f64> {
    if let Some(&v) = a.cache().lambda_phi.get() {
        return Ok(v);
    }
    let value = match a.kind() {
        EnsembleKind::PartialDft => (a.n() * a.k()) as f64,
        _ => {
            let op = LiftedOperator::new(a);
            let start = vectorize(&CMatrix::identity(a.k(), a.k()));
            leading_eigpair_from(&op, &start, SPECTRAL_TOL, SPECTRAL_MAX_STEPS)?
                .pair
                .value
        }
    };
    Ok(*a.cache().lambda_phi.get_or_init(|| value))
}

fn phi_apply(a: &MeasurementEnsemble, v: &CMatrix) -> CMatrix {
    let m = a.matrix();
    let vm = v * m;
    // c_i = a_i^H V a_i
    let mut scaled = m.clone();
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        let c = m.column(i).dotc(&vm.column(i));
        col *= c;
    }
    scaled * m.adjoint()
}

/// `sum_i (a_i^H V a_i) a_i a_i^H`, i.e. `Phi vec(V)` reshaped to `K x K`.
pub fn phi_matvec(a: &MeasurementEnsemble, v: &HermitianMatrix) -> Result<HermitianMatrix> {
    if v.dim() != a.k() {
        return Err(PrimeError::invalid(format!(
            "phi_matvec: V is {0}x{0}, ensemble has K = {1}",
            v.dim(),
            a.k()
        )));
    }
    Ok(HermitianMatrix::symmetrized(phi_apply(a, v.as_matrix())))
}

/// Column-major `vec(V)`.
pub fn vectorize(v: &CMatrix) -> CVector {
    CVector::from_column_slice(v.as_slice())
}

/// Inverse of [`vectorize`] for a `k x k` matrix.
pub fn unvectorize(v: &CVector, k: usize) -> CMatrix {
    CMatrix::from_column_slice(k, k, v.as_slice())
}

/// `Phi` as a [`HermitianOperator`] on `C^{K^2}`, never materialized.
pub struct LiftedOperator<'a> {
    ensemble: &'a MeasurementEnsemble,
}

impl<'a> LiftedOperator<'a> {
    pub fn new(ensemble: &'a MeasurementEnsemble) -> Self {
        LiftedOperator { ensemble }
    }
}

impl HermitianOperator for LiftedOperator<'_> {
    fn dim(&self) -> usize {
        self.ensemble.k() * self.ensemble.k()
    }

    fn apply(&self, v: &CVector) -> CVector {
        let k = self.ensemble.k();
        vectorize(&phi_apply(self.ensemble, &unvectorize(v, k)))
    }
}
