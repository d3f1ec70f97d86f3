mod common;

use batchprop::chebyshev::{expm_batch, make_plan, max_exponent_norm, ExpWorkspace, M_MAX_GRID};
use batchprop::linalg::{BatchBackend, CpuBackend, Matrix, MatrixBatch, Precision};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

/// Hermitian matrix rescaled to the given 1-norm.
fn scaled(seed: u64, d: usize, norm: f64) -> Matrix<f64> {
    let h = random_hermitian(&mut rng(seed), d);
    let n = h.one_norm();
    h.scale_real(norm / n)
}

fn exp_one(g: &Matrix<f64>) -> (Matrix<f64>, f64, usize) {
    let be = CpuBackend::new();
    let norm = g.one_norm();
    let plan = make_plan(-norm, norm, Precision::Fp64).unwrap();
    let batch = MatrixBatch::from_matrices(std::slice::from_ref(g)).unwrap();
    let mut ws = ExpWorkspace::new();
    let u = expm_batch(&be, &batch, &plan, &mut ws).unwrap().get(0).unwrap();
    (u, plan.predicted_error, plan.m_max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_eigendecomposition(seed in any::<u64>(), d in 1usize..=8, idx in 0usize..12, frac in 0.05f64..1.0) {
        let norm = frac * max_exponent_norm(M_MAX_GRID[idx], Precision::Fp64);
        let g = scaled(seed, d, norm);
        let (u, eps, _) = exp_one(&g);
        let err = max_diff(&u, &exp_oracle(&g));
        prop_assert!(err <= 10.0 * eps + 100.0 * f64::EPSILON, "err {err:e}, eps {eps:e}");
    }

    #[test]
    fn unitary(seed in any::<u64>(), d in 1usize..=8, frac in 0.05f64..1.0) {
        let g = scaled(seed, d, frac * max_exponent_norm(25, Precision::Fp64));
        let (u, _, _) = exp_one(&g);
        prop_assert!(u.unitarity_defect() <= 64.0 * f64::EPSILON * d as f64);
    }

    #[test]
    fn determinant_phase(seed in any::<u64>(), d in 1usize..=4, norm in 0.01f64..4.0) {
        let g = scaled(seed, d, norm);
        let (u, _, _) = exp_one(&g);
        let want = (Complex64::new(0.0, -1.0) * g.trace()).exp();
        prop_assert!((det(&u) - want).norm() <= 1e-12);
    }

    #[test]
    fn scalar_batches(values in proptest::collection::vec(-4.0f64..4.0, 1..40)) {
        let be = CpuBackend::new();
        let ms: Vec<_> = values.iter().map(|&v| Matrix::diagonal(&[Complex64::new(v, 0.0)])).collect();
        let batch = MatrixBatch::from_matrices(&ms).unwrap();
        let plan = make_plan(-4.0, 4.0, Precision::Fp64).unwrap();
        let mut ws = ExpWorkspace::new();
        let u = expm_batch(&be, &batch, &plan, &mut ws).unwrap();
        for (k, &v) in values.iter().enumerate() {
            let want = Complex64::new(0.0, -v).exp();
            prop_assert!((u.matrix(k)[0] - want).norm() <= 10.0 * plan.predicted_error + 100.0 * f64::EPSILON);
        }
    }

    #[test]
    fn gemm_count_independent_of_batch(count in 1usize..50, idx in 0usize..12) {
        let be = CpuBackend::new();
        let m = M_MAX_GRID[idx];
        let beta = 0.9 * max_exponent_norm(m, Precision::Fp32);
        let plan = make_plan(-beta, beta, Precision::Fp32).unwrap();
        let batch = MatrixBatch::<f32>::repeat(&Matrix::sigma_x().scale_real(beta as f32), count);
        let mut ws = ExpWorkspace::new();
        expm_batch(&be, &batch, &plan, &mut ws).unwrap();
        prop_assert_eq!(be.gemm_calls(), plan.m_max as u64 + 1);
    }
}
