mod common;

use std::f64::consts::PI;

use common::*;
use prime_core::metrics::*;
use prime_core::problem::complex_gaussian_vector;
use prime_core::CVector;
use proptest::prelude::*;

/// Minimum of the aligned error over a phase grid, refined by golden section.
fn grid_min(x_star: &CVector, x_o: &CVector) -> f64 {
    let f = |phi: f64| squared_error_at(x_star, x_o, phi);
    let step = 2.0 * PI / 720.0;
    let best = (0..720)
        .map(|i| -PI + i as f64 * step)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut lo, mut hi) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi))
}

/// Direct evaluation of `sum_i x[i] conj(x[i - m])` with zero padding.
fn autocorr_oracle(x: &CVector, m: isize) -> prime_core::Complex64 {
    let k = x.len() as isize;
    let mut s = c(0.0, 0.0);
    for i in 0..k {
        let j = i - m;
        if (0..k).contains(&j) {
            s += x[i as usize] * x[j as usize].conj();
        }
    }
    s
}

#[test]
fn alignment_matches_grid_search() {
    let mut r = rng(1);
    for t in 0..500 {
        let k = 1 + t % 12;
        let xs = complex_gaussian_vector(k, &mut r);
        let xo = complex_gaussian_vector(k, &mut r);
        let got = aligned_squared_error(&xs, &xo);
        let oracle = grid_min(&xs, &xo);
        assert!(got <= oracle + 1e-9 * (1.0 + oracle), "pair {t}: {got} vs {oracle}");
        assert!(got >= oracle - 1e-9 * (1.0 + oracle));
    }
}

#[test]
fn rotated_truth_has_zero_error() {
    let xo = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
    let phi = PI / 3.0;
    let xs = &xo * c(phi.cos(), phi.sin());
    assert!((align_phase(&xs, &xo) - phi).abs() < 1e-12);
    assert!(aligned_squared_error(&xs, &xo) < 1e-24);
    let rep = classify(&xs, &xo, Setting::GaussianDirect);
    assert!(rep.success && rep.primary_success());
    assert_eq!(rep.autocorr_success, None);
}

#[test]
fn orthogonal_pair_aligns_to_zero() {
    let xo = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let xs = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    assert_eq!(align_phase(&xs, &xo), 0.0);
    assert_eq!(aligned_squared_error(&xs, &xo), 2.0);
}

#[test]
fn threshold_is_strict() {
    let xo = CVector::from_vec(vec![c(1.0, 0.0)]);
    let xs = CVector::from_vec(vec![c(1.0 + 1e-2, 0.0)]);
    let err = aligned_squared_error(&xs, &xo);
    assert!(!classify_with(&xs, &xo, Setting::GaussianDirect, err).success);
    assert!(classify_with(&xs, &xo, Setting::GaussianDirect, err * 1.0001).success);
    assert_eq!(classify(&xs, &xo, Setting::GaussianDirect).threshold, 1e-4);
}

#[test]
fn autocorrelation_matches_direct_sum() {
    let mut r = rng(2);
    for k in 1..10 {
        let x = complex_gaussian_vector(k, &mut r);
        let ac = autocorrelation(&x);
        assert_eq!(ac.values.len(), 2 * k - 1);
        assert_eq!(ac.k(), k);
        for m in -(k as isize - 1)..k as isize {
            assert!((ac.get(m).unwrap() - autocorr_oracle(&x, m)).norm() < 1e-12);
        }
        assert_eq!(ac.get(k as isize), None);
        assert!((ac.get(0).unwrap().re - x.norm_squared()).abs() < 1e-12);
    }
}

#[test]
fn autocorrelation_invariances() {
    let mut r = rng(3);
    for t in 0..100 {
        let k = 2 + t % 9;
        let x = complex_gaussian_vector(k, &mut r);
        let ac = autocorrelation(&x);
        for m in 1..k as isize {
            assert!((ac.get(-m).unwrap() - ac.get(m).unwrap().conj()).norm() < 1e-12);
        }
        let phi = 0.1 * t as f64;
        assert!(ac.squared_distance(&autocorrelation(&(&x * c(phi.cos(), phi.sin())))) < 1e-10);
        // Conjugate reversal.
        let rev = CVector::from_fn(k, |i, _| x[k - 1 - i].conj());
        assert!(ac.squared_distance(&autocorrelation(&rev)) < 1e-10);
        // Shift inside a zero-padded frame.
        let mut padded = CVector::zeros(k + 3);
        let mut shifted = CVector::zeros(k + 3);
        for i in 0..k {
            padded[i] = x[i];
            shifted[i + 3] = x[i];
        }
        assert!(autocorrelation(&padded).squared_distance(&autocorrelation(&shifted)) < 1e-10);
    }
}

#[test]
fn dft_setting_uses_the_autocorrelation_for_success() {
    let mut r = rng(4);
    let x = complex_gaussian_vector(6, &mut r);
    let rev = CVector::from_fn(6, |i, _| x[5 - i].conj());
    let rep = classify(&rev, &x, Setting::DftAutocorr);
    assert_eq!(rep.autocorr_success, Some(true));
    assert!(rep.primary_success());
    assert!(rep.primary_error() < 1e-20);
    assert_eq!(rep.autocorr_threshold, Some(1e-8));
    assert_eq!(rep.threshold, 1e-4);
    // The reversal is far in the aligned sense, so the diagnostic flag is off.
    assert!(!rep.success);
}

#[test]
#[should_panic]
fn length_mismatch_panics() {
    align_phase(&CVector::zeros(2), &CVector::zeros(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aligned_error_is_phase_invariant(seed in 0u64..10_000, a in -PI..PI, b in -PI..PI) {
        let mut r = rng(seed);
        let xs = complex_gaussian_vector(5, &mut r);
        let xo = complex_gaussian_vector(5, &mut r);
        let e = aligned_squared_error(&xs, &xo);
        let e2 = aligned_squared_error(&(&xs * c(a.cos(), a.sin())), &(&xo * c(b.cos(), b.sin())));
        prop_assert!((e - e2).abs() <= 1e-10 * (1.0 + e));
        prop_assert!(e <= squared_error_at(&xs, &xo, a) + 1e-12);
    }
}
