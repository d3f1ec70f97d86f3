#![allow(dead_code)]

use batchprop::linalg::{Matrix, Real};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, d: usize) -> Matrix<f64> {
    let data = (0..d * d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Matrix::from_vec(d, data).unwrap()
}

/// `(A + A†)/2` for Gaussian `A`.
pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> Matrix<f64> {
    let a = random_matrix(rng, d);
    a.add(&a.adjoint()).unwrap().scale_real(0.5)
}

/// Unitary from the eigenvectors of a random Hermitian matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> Matrix<f64> {
    let h = random_hermitian(rng, d);
    exp_oracle(&h.scale_real(3.0))
}

fn to_na(m: &Matrix<f64>) -> DMatrix<Complex64> {
    let d = m.dim();
    DMatrix::from_fn(d, d, |i, j| m[(i, j)])
}

fn from_na(m: &DMatrix<Complex64>) -> Matrix<f64> {
    let d = m.nrows();
    let mut out = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

pub fn eigenvalues(h: &Matrix<f64>) -> Vec<f64> {
    to_na(h).symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// `exp(−iH)` through the eigendecomposition `H = V Λ V†`.
pub fn exp_oracle(h: &Matrix<f64>) -> Matrix<f64> {
    let eig = to_na(h).symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(0.0, -l).exp()));
    from_na(&(v * phases * v.adjoint()))
}

pub fn det(m: &Matrix<f64>) -> Complex64 {
    to_na(m).determinant()
}

pub fn max_diff<T: Real>(a: &Matrix<T>, b: &Matrix<f64>) -> f64 {
    a.cast::<f64>().max_abs_diff(b)
}
