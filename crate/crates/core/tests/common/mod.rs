//! Oracles shared by the integration tests. None of them call the code they check.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use prime_core::problem::{complex_gaussian_vector, gen_dft_ensemble, gen_gaussian_ensemble, ProblemInstance};
use prime_core::{CMatrix, CVector, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let e = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), idx.len(), |r, col| e.eigenvectors[(r, idx[col])]);
    (values, vectors)
}

pub fn max_eig(m: &CMatrix) -> f64 {
    *eigh(m).0.last().unwrap()
}

/// `Phi = sum_i vec(a_i a_i^H) vec(a_i a_i^H)^H`, built from its definition.
pub fn dense_phi(a: &CMatrix) -> CMatrix {
    let k = a.nrows();
    let mut phi = CMatrix::zeros(k * k, k * k);
    for i in 0..a.ncols() {
        let col = a.column(i).into_owned();
        let outer = &col * col.adjoint();
        let v = CVector::from_column_slice(outer.as_slice());
        phi += &v * v.adjoint();
    }
    phi
}

/// `sum_i y_i a_i a_i^H` by explicit summation.
pub fn dense_b(a: &CMatrix, y: &[f64]) -> CMatrix {
    let k = a.nrows();
    let mut b = CMatrix::zeros(k, k);
    for (i, &yi) in y.iter().enumerate() {
        let col = a.column(i).into_owned();
        b += (&col * col.adjoint()) * c(yi, 0.0);
    }
    b
}

pub fn max_abs(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random Gaussian instance with a complex Gaussian ground truth.
pub fn gaussian_instance(k: usize, n: usize, seed: u64, noise: f64) -> ProblemInstance {
    let ens = Arc::new(gen_gaussian_ensemble(k, n, seed).unwrap());
    let x = complex_gaussian_vector(k, &mut rng(seed.wrapping_mul(31).wrapping_add(7)));
    ProblemInstance::synthesize(ens, x, noise, seed.wrapping_add(1000)).unwrap()
}

/// Partial DFT instance with a unit-norm random ground truth.
pub fn dft_instance(k: usize, n: usize, seed: u64, noise: f64) -> ProblemInstance {
    let ens = Arc::new(gen_dft_ensemble(k, n).unwrap());
    let x = complex_gaussian_vector(k, &mut rng(seed.wrapping_mul(31).wrapping_add(7)));
    let x = x.unscale(x.norm());
    ProblemInstance::synthesize(ens, x, noise, seed.wrapping_add(1000)).unwrap()
}

pub fn clean_instance(k: usize, n: usize, seed: u64) -> ProblemInstance {
    gaussian_instance(k, n, seed, 0.0)
}

/// Largest step-to-step increase of a trace, relative to `1 + |f|`.
pub fn worst_increase(trace: &[f64]) -> f64 {
    trace
        .windows(2)
        .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Central differences of `f` with respect to `(Re x, Im x)`, packed as complex.
pub fn fd_gradient(f: impl Fn(&CVector) -> f64, x: &CVector, h: f64) -> CVector {
    let mut out = CVector::zeros(x.len());
    for j in 0..x.len() {
        for (unit, imag) in [(c(1.0, 0.0), false), (c(0.0, 1.0), true)] {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += unit * h;
            xm[j] -= unit * h;
            let d = (f(&xp) - f(&xm)) / (2.0 * h);
            if imag {
                out[j].im = d;
            } else {
                out[j].re = d;
            }
        }
    }
    out
}

pub fn max_abs_m(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
