//! Measurement models, measurement synthesis, objectives and spectral initialization.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{PrimeError, Result};
use crate::linalg::{self, GramFactor, HermitianMatrix, SPECTRAL_MAX_STEPS, SPECTRAL_TOL};
use crate::{CMatrix, CVector, Complex64};

/// How an ensemble was produced. Only `PartialDft` has closed-form spectral constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    /// i.i.d. standard complex Gaussian entries (real and imaginary parts `N(0, 1)`).
    Gaussian,
    /// The first `K` rows of the `N x N` DFT matrix.
    PartialDft,
    /// A caller-supplied matrix; treated like `Gaussian` numerically.
    Explicit,
}

#[derive(Debug, Default, Clone)]
pub(crate) struct SpectralCache {
    pub(crate) lambda_gram: OnceLock<f64>,
    pub(crate) lambda_phi: OnceLock<f64>,
    pub(crate) gram_factor: OnceLock<GramFactor>,
}

/// The `K x N` measurement matrix `A = [a_1, ..., a_N]` plus cached spectral constants.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    matrix: CMatrix,
    kind: EnsembleKind,
    seed: Option<u64>,
    cache: SpectralCache,
}

impl MeasurementEnsemble {
    /// Wraps an arbitrary `K x N` matrix whose columns are the measurement vectors.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(PrimeError::invalid("measurement matrix must be non-empty"));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(PrimeError::invalid("measurement matrix has non-finite entries"));
        }
        Ok(MeasurementEnsemble {
            matrix,
            kind: EnsembleKind::Explicit,
            seed: None,
            cache: SpectralCache::default(),
        })
    }

    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `A^H x`, the vector of inner products `a_i^H x`.
    pub fn project(&self, x: &CVector) -> CVector {
        self.matrix.ad_mul(x)
    }

    /// Squared column norms `||a_i||^2`.
    pub fn column_norms_sqr(&self) -> Vec<f64> {
        self.matrix.column_iter().map(|c| c.norm_squared()).collect()
    }

    pub fn cached_lambda_gram(&self) -> Option<f64> {
        self.cache.lambda_gram.get().copied()
    }

    pub fn cached_lambda_phi(&self) -> Option<f64> {
        self.cache.lambda_phi.get().copied()
    }

    pub(crate) fn cache(&self) -> &SpectralCache {
        &self.cache
    }

    pub(crate) fn gram_factor(&self) -> &GramFactor {
        self.cache.gram_factor.get_or_init(|| linalg::factor_gram(&self.matrix))
    }
}

/// Standard complex Gaussian vector of length `len` (real and imaginary parts `N(0, 1)`).
pub fn complex_gaussian_vector(len: usize, rng: &mut impl rand::Rng) -> CVector {
    CVector::from_fn(len, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Entries are independent standard complex Gaussians; the same seed gives the same matrix.
pub fn gen_gaussian_ensemble(k: usize, n: usize, seed: u64) -> Result<MeasurementEnsemble> {
    if k == 0 || n == 0 {
        return Err(PrimeError::invalid("K and N must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Column-major fill: column i is the measurement vector a_i.
    let data = complex_gaussian_vector(k * n, &mut rng);
    Ok(MeasurementEnsemble {
        matrix: CMatrix::from_column_slice(k, n, data.as_slice()),
        kind: EnsembleKind::Gaussian,
        seed: Some(seed),
        cache: SpectralCache::default(),
    })
}

/// First `K` rows of the `N x N` DFT matrix, `[a_i]_k = exp(j 2 pi k i / N)` (0-based).
///
/// `lambda_max(A A^H) = N` and `lambda_max(Phi) = N K` are stored eagerly.
pub fn gen_dft_ensemble(k: usize, n: usize) -> Result<MeasurementEnsemble> {
    if k == 0 || n == 0 {
        return Err(PrimeError::invalid("K and N must be positive"));
    }
    if k > n {
        return Err(PrimeError::invalid(format!(
            "partial DFT ensemble needs K <= N, got K = {k}, N = {n}"
        )));
    }
    let matrix = CMatrix::from_fn(k, n, |row, col| {
        // Reduce the exponent mod N first so large products keep full accuracy.
        let e = (row * col) % n;
        Complex64::from_polar(1.0, 2.0 * PI * e as f64 / n as f64)
    });
    let cache = SpectralCache::default();
    let _ = cache.lambda_gram.set(n as f64);
    let _ = cache.lambda_phi.set((n * k) as f64);
    Ok(MeasurementEnsemble {
        matrix,
        kind: EnsembleKind::PartialDft,
        seed: None,
        cache,
    })
}

/// Intensity measurements `y`, clamped to be nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub values: Vec<f64>,
    pub noise_variance: f64,
    /// Entries that went negative after adding noise and were forced to 0.
    pub clamped_count: usize,
    pub seed: Option<u64>,
}

impl Measurements {
    /// Wraps given intensities; negative entries are rejected.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(PrimeError::invalid("measurements must be finite and nonnegative"));
        }
        Ok(Measurements {
            values,
            noise_variance: 0.0,
            clamped_count: 0,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `y_i = max(0, |a_i^H x|^2 + n_i)` with `n_i ~ N(0, noise_variance)` i.i.d. real.
pub fn synthesize(a: &MeasurementEnsemble, x: &CVector, noise_variance: f64, seed: u64) -> Result<Measurements> {
    if x.len() != a.k() {
        return Err(PrimeError::invalid(format!(
            "signal has length {}, ensemble has K = {}",
            x.len(),
            a.k()
        )));
    }
    if !(noise_variance.is_finite() && noise_variance >= 0.0) {
        return Err(PrimeError::invalid("noise variance must be finite and nonnegative"));
    }
    let clean = a.project(x).map(|z| z.norm_sqr());
    if noise_variance == 0.0 {
        return Ok(Measurements {
            values: clean.iter().copied().collect(),
            noise_variance,
            clamped_count: 0,
            seed: Some(seed),
        });
    }
    let sigma = noise_variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clamped_count = 0;
    let values = clean
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let noisy = v + sigma * z;
            if noisy < 0.0 {
                clamped_count += 1;
                0.0
            } else {
                noisy
            }
        })
        .collect();
    Ok(Measurements {
        values,
        noise_variance,
        clamped_count,
        seed: Some(seed),
    })
}

/// An ensemble bound to its measurements, plus per-instance caches.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    ensemble: Arc<MeasurementEnsemble>,
    measurements: Measurements,
    ground_truth: Option<CVector>,
    sqrt_y: CVector,
    weighted_cov: OnceLock<HermitianMatrix>,
}

impl ProblemInstance {
    pub fn new(
        ensemble: Arc<MeasurementEnsemble>,
        measurements: Measurements,
        ground_truth: Option<CVector>,
    ) -> Result<Self> {
        if measurements.len() != ensemble.n() {
            return Err(PrimeError::invalid(format!(
                "{} measurements for an ensemble with N = {}",
                measurements.len(),
                ensemble.n()
            )));
        }
        if let Some(x) = &ground_truth {
            if x.len() != ensemble.k() {
                return Err(PrimeError::invalid("ground truth length differs from K"));
            }
        }
        let sqrt_y = CVector::from_iterator(
            measurements.len(),
            measurements.values.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)),
        );
        Ok(ProblemInstance {
            ensemble,
            measurements,
            ground_truth,
            sqrt_y,
            weighted_cov: OnceLock::new(),
        })
    }

    /// Synthesizes measurements of `x` and keeps `x` as ground truth.
    pub fn synthesize(ensemble: Arc<MeasurementEnsemble>, x: CVector, noise_variance: f64, seed: u64) -> Result<Self> {
        let y = synthesize(&ensemble, &x, noise_variance, seed)?;
        ProblemInstance::new(ensemble, y, Some(x))
    }

    pub fn ensemble(&self) -> &MeasurementEnsemble {
        &self.ensemble
    }

    pub fn shared_ensemble(&self) -> Arc<MeasurementEnsemble> {
        Arc::clone(&self.ensemble)
    }

    pub fn measurements(&self) -> &Measurements {
        &self.measurements
    }

    pub fn y(&self) -> &[f64] {
        &self.measurements.values
    }

    /// `sqrt(y)` as a complex vector.
    pub fn sqrt_y(&self) -> &CVector {
        &self.sqrt_y
    }

    pub fn ground_truth(&self) -> Option<&CVector> {
        self.ground_truth.as_ref()
    }

    pub fn k(&self) -> usize {
        self.ensemble.k()
    }

    pub fn n(&self) -> usize {
        self.ensemble.n()
    }

    pub(crate) fn check_signal(&self, x: &CVector) -> Result<()> {
        if x.len() != self.k() {
            return Err(PrimeError::invalid(format!(
                "signal has length {}, problem has K = {}",
                x.len(),
                self.k()
            )));
        }
        Ok(())
    }

    /// `B = sum_i y_i a_i a_i^H`, computed once per instance.
    pub fn weighted_covariance(&self) -> &HermitianMatrix {
        self.weighted_cov.get_or_init(|| {
            let a = self.ensemble.matrix();
            let mut scaled = a.clone();
            for (mut col, &y) in scaled.column_iter_mut().zip(self.y()) {
                col *= Complex64::new(y, 0.0);
            }
            HermitianMatrix::symmetrized(scaled * a.adjoint())
        })
    }
}

/// `sum_i (y_i - |a_i^H x|^2)^2`.
pub fn objective_squared(p: &ProblemInstance, x: &CVector) -> f64 {
    p.ensemble()
        .project(x)
        .iter()
        .zip(p.y())
        .map(|(z, &y)| {
            let r = y - z.norm_sqr();
            r * r
        })
        .sum()
}

/// `sum_i (sqrt(y_i) - |a_i^H x|)^2`.
pub fn objective_modulus(p: &ProblemInstance, x: &CVector) -> f64 {
    p.ensemble()
        .project(x)
        .iter()
        .zip(p.y())
        .map(|(z, &y)| {
            let r = y.sqrt() - z.norm();
            r * r
        })
        .sum()
}

/// `4 sum_i (|a_i^H x|^2 - y_i) a_i (a_i^H x)`.
///
/// This is the gradient of `objective_squared` with respect to `(Re x, Im x)`
/// packed as `Re g + j Im g`, i.e. twice the Wirtinger derivative `df/d conj(x)`.
pub fn gradient_squared(p: &ProblemInstance, x: &CVector) -> CVector {
    let proj = p.ensemble().project(x);
    let weights = CVector::from_iterator(
        proj.len(),
        proj.iter().zip(p.y()).map(|(z, &y)| *z * (4.0 * (z.norm_sqr() - y))),
    );
    p.ensemble().matrix() * weights
}

/// The Wirtinger Flow scale `lambda` with `lambda^2 = K sum y_i / sum ||a_i||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitScale {
    pub lambda: f64,
}

impl InitScale {
    pub fn from_problem(p: &ProblemInstance) -> Self {
        let sum_y: f64 = p.y().iter().sum();
        let sum_a: f64 = p.ensemble().column_norms_sqr().iter().sum();
        InitScale {
            lambda: (p.k() as f64 * sum_y / sum_a).sqrt(),
        }
    }

    pub fn lambda_sq(&self) -> f64 {
        self.lambda * self.lambda
    }
}

/// Leading eigenvector of `B = sum_i y_i a_i a_i^H`, scaled by `lambda` when requested.
pub fn spectral_init(p: &ProblemInstance, apply_scale: bool) -> Result<CVector> {
    if p.y().iter().all(|&v| v == 0.0) {
        return Err(PrimeError::DegenerateInit);
    }
    let est = linalg::leading_eigpair(p.weighted_covariance(), SPECTRAL_TOL, SPECTRAL_MAX_STEPS)?;
    let u = est.pair.vector;
    if apply_scale {
        Ok(u * Complex64::new(InitScale::from_problem(p).lambda, 0.0))
    } else {
        Ok(u)
    }
}
