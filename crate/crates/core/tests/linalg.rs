mod common;

use common::*;
use prime_core::linalg::*;
use prime_core::problem::{complex_gaussian_vector, gen_dft_ensemble, gen_gaussian_ensemble, MeasurementEnsemble};
use prime_core::{CMatrix, CVector, PrimeError};
use proptest::prelude::*;

fn random_hermitian(k: usize, seed: u64) -> CMatrix {
    let mut r = rng(seed);
    let g = CMatrix::from_column_slice(k, k, complex_gaussian_vector(k * k, &mut r).as_slice());
    (&g + g.adjoint()).unscale(2.0)
}

fn random_psd(k: usize, seed: u64) -> CMatrix {
    let mut r = rng(seed);
    let g = CMatrix::from_column_slice(k, k, complex_gaussian_vector(k * k, &mut r).as_slice());
    &g * g.adjoint()
}

/// Phase-insensitive distance between unit vectors.
fn vector_gap(u: &CVector, v: &CVector) -> f64 {
    let ip = v.dotc(u);
    let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { c(1.0, 0.0) };
    max_abs(&(u - v * phase))
}

#[test]
fn hermitian_validation() {
    let mut m = CMatrix::identity(3, 3);
    m[(0, 1)] = c(1.0, 1.0);
    assert!(HermitianMatrix::new(m.clone()).is_err());
    m[(1, 0)] = c(1.0, -1.0);
    assert!(HermitianMatrix::new(m).is_ok());
    assert!(HermitianMatrix::new(CMatrix::zeros(2, 3)).is_err());
}

#[test]
fn diagonal_power_iteration() {
    let m = HermitianMatrix::from_real_diagonal(&[3.0, 1.0]);
    let start = CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
    let one = power_iteration(&m, 1, &start).unwrap();
    // One step gives u = (3, 1) / sqrt(10), so u^H M u = (3 * 9 + 1) / 10.
    assert!((one.value - 2.8).abs() < 1e-14);
    let est = leading_eigpair(&m, 1e-12, 10_000).unwrap();
    assert!(est.converged);
    assert!((est.pair.value - 3.0).abs() < 1e-11);
    assert!((est.pair.vector[0].norm() - 1.0).abs() < 1e-8);
}

#[test]
fn degenerate_and_invalid_starts() {
    let z = HermitianMatrix::zeros(2);
    let start = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    assert_eq!(
        power_iteration(&z, 3, &start),
        Err(PrimeError::DegenerateMatrix { step: 1 })
    );
    let m = HermitianMatrix::identity(2);
    assert!(matches!(
        power_iteration(&m, 3, &CVector::zeros(2)),
        Err(PrimeError::InvalidArgument(_))
    ));
    assert!(matches!(
        power_iteration(&m, 0, &start),
        Err(PrimeError::InvalidArgument(_))
    ));
}

#[test]
fn unconverged_is_flagged_not_failed() {
    // Two eigenvalues of equal magnitude and opposite sign never settle.
    let m = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
    let est = leading_eigpair(&m, 1e-12, 50).unwrap();
    assert!(!est.converged);
    assert_eq!(est.steps, 50);
}

#[test]
fn leading_eigpair_matches_dense_oracle() {
    for seed in 0..20 {
        let k = 2 + (seed as usize % 7);
        let m = random_psd(k, seed);
        let (vals, vecs) = eigh(&m);
        // Skip near-degenerate tops where the eigenvector is ill-conditioned.
        if (vals[k - 1] - vals[k - 2]) / vals[k - 1] < 0.05 {
            continue;
        }
        let est = leading_eigpair(&HermitianMatrix::new(m.clone()).unwrap(), 1e-10, 200_000).unwrap();
        assert!(est.converged);
        assert!((est.pair.value - vals[k - 1]).abs() <= 1e-8 * vals[k - 1]);
        let top = vecs.column(k - 1).into_owned();
        assert!(vector_gap(&est.pair.vector, &top) < 1e-8, "seed {seed}");
    }
}

#[test]
fn indefinite_matrix_uses_rayleigh_quotient_sign() {
    for seed in 0..10 {
        let m = random_hermitian(5, 100 + seed);
        let (vals, _) = eigh(&m);
        let mut by_size = vals.clone();
        by_size.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        let dominant = by_size[0];
        if by_size[1].abs() / dominant.abs() > 0.9 {
            continue;
        }
        let est = leading_eigpair(&HermitianMatrix::new(m).unwrap(), 1e-10, 200_000).unwrap();
        assert!((est.pair.value - dominant).abs() < 1e-8 * dominant.abs(), "seed {seed}");
    }
}

#[test]
fn gram_solve_matches_dense_least_squares() {
    for seed in 0..10 {
        let ens = gen_gaussian_ensemble(4, 12, seed).unwrap();
        let b = complex_gaussian_vector(12, &mut rng(seed + 50));
        let x = gram_solve(&ens, &b).unwrap();
        let a = ens.matrix();
        let oracle = (a * a.adjoint()).try_inverse().unwrap() * (a * &b);
        assert!(max_abs(&(&x - &oracle)) < 1e-10);
        // Normal equations: A (A^H x - b) = 0.
        assert!(max_abs(&(a * (a.adjoint() * &x - &b))) < 1e-10);
    }
    let dft = gen_dft_ensemble(3, 7).unwrap();
    let b = complex_gaussian_vector(7, &mut rng(9));
    let a = dft.matrix();
    let oracle = (a * a.adjoint()).try_inverse().unwrap() * (a * &b);
    assert!(max_abs(&(gram_solve(&dft, &b).unwrap() - oracle)) < 1e-12);
    assert!(gram_solve(&dft, &CVector::zeros(3)).is_err());
}

#[test]
fn singular_gram_is_reported() {
    // Two identical rows: A A^H has rank one.
    let row = complex_gaussian_vector(6, &mut rng(3));
    let m = CMatrix::from_fn(2, 6, |_, j| row[j]);
    let ens = MeasurementEnsemble::from_matrix(m).unwrap();
    assert!(matches!(
        gram_solve(&ens, &CVector::zeros(6)),
        Err(PrimeError::SingularGram { .. })
    ));
}

#[test]
fn spectral_identities_for_partial_dft() {
    for k in 1..=8 {
        for n in k..=16 {
            let e = gen_dft_ensemble(k, n).unwrap();
            assert_eq!(lambda_max_gram(&e).unwrap(), n as f64);
            assert_eq!(lambda_max_phi(&e).unwrap(), (n * k) as f64);
            let a = e.matrix();
            assert!((max_eig(&(a * a.adjoint())) - n as f64).abs() < 1e-9 * n as f64);
            if k <= 4 {
                assert!((max_eig(&dense_phi(a)) - (n * k) as f64).abs() < 1e-9 * (n * k) as f64);
            }
        }
    }
}

#[test]
fn gaussian_spectral_constants_match_dense_oracles() {
    for k in 1..=4 {
        for seed in 0..3 {
            let e = gen_gaussian_ensemble(k, 3 * k + 2, 10 * k as u64 + seed).unwrap();
            let a = e.matrix();
            let gram = max_eig(&(a * a.adjoint()));
            let phi = max_eig(&dense_phi(a));
            assert!((lambda_max_gram(&e).unwrap() - gram).abs() <= 1e-8 * gram);
            assert!((lambda_max_phi(&e).unwrap() - phi).abs() <= 1e-8 * phi);
            assert_eq!(e.cached_lambda_phi(), Some(lambda_max_phi(&e).unwrap()));
        }
    }
}

#[test]
fn phi_matvec_matches_definition() {
    for seed in 0..5 {
        let e = gen_gaussian_ensemble(3, 8, seed).unwrap();
        let v = HermitianMatrix::new(random_hermitian(3, seed + 9)).unwrap();
        let got = phi_matvec(&e, &v).unwrap();
        let oracle = dense_phi(e.matrix()) * vectorize(v.as_matrix());
        assert!(max_abs(&(vectorize(got.as_matrix()) - oracle)) < 1e-10);
    }
    let e = gen_gaussian_ensemble(3, 8, 0).unwrap();
    assert!(phi_matvec(&e, &HermitianMatrix::identity(2)).is_err());
}

#[test]
fn lifted_operator_is_phi() {
    let e = gen_gaussian_ensemble(3, 7, 4).unwrap();
    let op = LiftedOperator::new(&e);
    let v = complex_gaussian_vector(9, &mut rng(1));
    assert_eq!(op.dim(), 9);
    assert!(max_abs(&(op.apply(&v) - dense_phi(e.matrix()) * &v)) < 1e-10);
    assert_eq!(
        unvectorize(&vectorize(&random_hermitian(3, 2)), 3),
        random_hermitian(3, 2)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rayleigh_quotient_is_monotone_on_psd(seed in 0u64..10_000, steps in 1usize..30) {
        let m = HermitianMatrix::new(random_psd(5, seed)).unwrap();
        let start = complex_gaussian_vector(5, &mut rng(seed ^ 0xff));
        let mut prev = f64::NEG_INFINITY;
        for s in 1..=steps {
            let rho = power_iteration(&m, s, &start).unwrap().value;
            prop_assert!(rho >= prev - 1e-12 * rho.abs());
            prev = rho;
        }
    }

    #[test]
    fn power_iterate_is_unit_norm(seed in 0u64..10_000) {
        let m = HermitianMatrix::new(random_hermitian(4, seed)).unwrap();
        let start = complex_gaussian_vector(4, &mut rng(seed + 1));
        let pair = power_iteration(&m, 3, &start).unwrap();
        prop_assert!((pair.vector.norm() - 1.0).abs() < 1e-12);
        prop_assert!((pair.value - m.quadratic_form(&pair.vector)).abs() < 1e-10 * (1.0 + pair.value.abs()));
    }
}
