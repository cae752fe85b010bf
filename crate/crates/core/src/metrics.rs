//! Recovery metrics: global-phase alignment, squared error and autocorrelation.

use crate::{CVector, Complex64};

/// Default success threshold on the phase-aligned squared error.
pub const GAUSSIAN_THRESHOLD: f64 = 1e-4;
/// Default success threshold on the autocorrelation squared error.
pub const AUTOCORR_THRESHOLD: f64 = 1e-8;

/// Inner products below this modulus leave the phase undetermined.
const ORTHOGONAL_FLOOR: f64 = 1e-15;

/// `phi = arg(x_o^H x_star)`, the minimizer of `||x_star - x_o e^{j phi}||^2`.
/// Returns 0 when the inner product vanishes (every phase is optimal then).
///
/// # Panics
/// If the lengths differ.
pub fn align_phase(x_star: &CVector, x_o: &CVector) -> f64 {
    assert_eq!(x_star.len(), x_o.len(), "align_phase: length mismatch");
    let ip = x_o.dotc(x_star);
    if ip.norm() < ORTHOGONAL_FLOOR {
        0.0
    } else {
        ip.arg()
    }
}

/// `||x_star - x_o e^{j phi}||^2`.
pub fn squared_error_at(x_star: &CVector, x_o: &CVector, phi: f64) -> f64 {
    assert_eq!(x_star.len(), x_o.len(), "squared_error_at: length mismatch");
    let rot = Complex64::from_polar(1.0, phi);
    x_star
        .iter()
        .zip(x_o.iter())
        .map(|(&a, &b)| (a - b * rot).norm_sqr())
        .sum()
}

/// Squared error after optimal global-phase alignment.
pub fn aligned_squared_error(x_star: &CVector, x_o: &CVector) -> f64 {
    squared_error_at(x_star, x_o, align_phase(x_star, x_o))
}

/// Autocorrelation `r[m] = sum_i x[i] conj(x[i - m])`, `m = -(K-1) ..= K-1`,
/// with out-of-range samples taken as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    /// `values[m + K - 1]` holds `r[m]`.
    pub values: Vec<Complex64>,
}

impl Autocorrelation {
    /// Signal length `K`.
    pub fn k(&self) -> usize {
        self.values.len().div_ceil(2)
    }

    /// `r[m]`, or `None` if `|m| >= K`.
    pub fn get(&self, m: isize) -> Option<Complex64> {
        let idx = m + self.k() as isize - 1;
        usize::try_from(idx).ok().and_then(|i| self.values.get(i).copied())
    }

    pub fn squared_distance(&self, other: &Autocorrelation) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "autocorrelation length mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }
}

pub fn autocorrelation(x: &CVector) -> Autocorrelation {
    let k = x.len();
    if k == 0 {
        return Autocorrelation { values: Vec::new() };
    }
    let mut values = vec![Complex64::new(0.0, 0.0); 2 * k - 1];
    for m in 0..k {
        let r: Complex64 = (m..k).map(|i| x[i] * x[i - m].conj()).sum();
        values[k - 1 + m] = r;
        values[k - 1 - m] = r.conj();
    }
    // r[0] is real by construction; drop the rounding residue.
    values[k - 1].im = 0.0;
    Autocorrelation { values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Gaussian measurements: success on the aligned error.
    GaussianDirect,
    /// DFT measurements: success on the autocorrelation error.
    DftAutocorr,
}

impl Setting {
    pub fn default_threshold(self) -> f64 {
        match self {
            Setting::GaussianDirect => GAUSSIAN_THRESHOLD,
            Setting::DftAutocorr => AUTOCORR_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub phase_shift_phi: f64,
    pub aligned_squared_error: f64,
    /// `aligned_squared_error < threshold`.
    pub success: bool,
    pub threshold: f64,
    pub autocorr_squared_error: Option<f64>,
    /// `autocorr_squared_error < autocorr_threshold`.
    pub autocorr_success: Option<bool>,
    pub autocorr_threshold: Option<f64>,
}

impl RecoveryReport {
    /// The flag that counts for the setting: autocorrelation success if present.
    pub fn primary_success(&self) -> bool {
        self.autocorr_success.unwrap_or(self.success)
    }

    /// The error that counts for the setting.
    pub fn primary_error(&self) -> f64 {
        self.autocorr_squared_error.unwrap_or(self.aligned_squared_error)
    }
}

/// Classifies with the default thresholds (1e-4 aligned, 1e-8 autocorrelation).
pub fn classify(x_star: &CVector, x_o: &CVector, setting: Setting) -> RecoveryReport {
    classify_with(x_star, x_o, setting, setting.default_threshold())
}

/// Like [`classify`] with `threshold` replacing the setting's primary threshold.
/// In the DFT setting the aligned error keeps the 1e-4 diagnostic threshold.
pub fn classify_with(x_star: &CVector, x_o: &CVector, setting: Setting, threshold: f64) -> RecoveryReport {
    let phi = align_phase(x_star, x_o);
    let err = squared_error_at(x_star, x_o, phi);
    match setting {
        Setting::GaussianDirect => RecoveryReport {
            phase_shift_phi: phi,
            aligned_squared_error: err,
            success: err < threshold,
            threshold,
            autocorr_squared_error: None,
            autocorr_success: None,
            autocorr_threshold: None,
        },
        Setting::DftAutocorr => {
            let ac_err = autocorrelation(x_o).squared_distance(&autocorrelation(x_star));
            RecoveryReport {
                phase_shift_phi: phi,
                aligned_squared_error: err,
                success: err < GAUSSIAN_THRESHOLD,
                threshold: GAUSSIAN_THRESHOLD,
                autocorr_squared_error: Some(ac_err),
                autocorr_success: Some(ac_err < threshold),
                autocorr_threshold: Some(threshold),
            }
        }
    }
}
