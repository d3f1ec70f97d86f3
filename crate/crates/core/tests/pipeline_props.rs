mod common;

use batchprop::hamiltonian::{
    build_exponent_batch, spectral_bound, ControlAmplitudes, ControlSystem, Quadrature,
};
use batchprop::linalg::{BatchBackend, CpuBackend, MatrixBatch};
use batchprop::magnus::{build_effective_system, commutator, magnus_coefficients, magnus_spectral_bound};
use batchprop::propagator::{accumulate, reduce_pairwise, QuantumState};
use batchprop::{Config, IntegratorContext, Mode};
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn random_system(seed: u64, d: usize, n: usize) -> ControlSystem {
    let mut r = rng(seed);
    let drift = random_hermitian(&mut r, d);
    let controls = (0..n).map(|_| random_hermitian(&mut r, d).scale_real(0.5)).collect();
    ControlSystem::new(drift, controls).unwrap()
}

fn random_amps(seed: u64, pts: usize, n: usize, dt: f64) -> ControlAmplitudes {
    let mut r = rng(seed);
    let values = (0..pts * n).map(|_| r.random_range(-1.0..=1.0)).collect();
    ControlAmplitudes::new(pts, dt, n, values).unwrap()
}

fn context(sys: &ControlSystem, mode: Mode) -> IntegratorContext {
    let mut ctx = IntegratorContext::create(Config::default()).unwrap();
    ctx.set_hamiltonian(sys.clone(), mode).unwrap();
    ctx
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn midpoint_exponents_within_bound_and_hermitian(seed in any::<u64>(), d in 1usize..=6, n in 0usize..=3, pts in 1usize..30, dt in 0.001f64..0.5) {
        let be = CpuBackend::new();
        let sys = random_system(seed, d, n);
        let amps = random_amps(seed ^ 1, pts, n, dt);
        let g = build_exponent_batch::<f64, _>(&be, &sys, &amps, Quadrature::Midpoint).unwrap();
        let bound = spectral_bound(&sys, dt);
        for k in 0..g.count() {
            let gk = g.get(k).unwrap();
            prop_assert!(gk.one_norm() <= bound * (1.0 + 1e-14));
            prop_assert!(gk.hermitian_defect() <= 1e-15 * bound);
        }
    }

    #[test]
    fn drift_only_midpoint_copies(seed in any::<u64>(), d in 1usize..=5, pts in 1usize..20, dt in 0.01f64..1.0) {
        let be = CpuBackend::new();
        let sys = random_system(seed, d, 0);
        let g = build_exponent_batch::<f64, _>(&be, &sys, &ControlAmplitudes::drift_only(pts, dt).unwrap(), Quadrature::Midpoint).unwrap();
        let want = sys.drift().scale_real(dt);
        for k in 0..pts {
            prop_assert_eq!(g.get(k).unwrap(), want.clone());
        }
    }

    #[test]
    fn magnus_constant_coefficients_degenerate(seed in any::<u64>(), d in 1usize..=4, n in 1usize..=3, steps in 1usize..12, dt in 0.005f64..0.1) {
        let sys = random_system(seed, d, n);
        let mut r = rng(seed ^ 7);
        let row: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..=1.0)).collect();
        let magnus_amps = ControlAmplitudes::from_rows(dt, n, &vec![row.clone(); 2 * steps + 1]).unwrap();
        let midpoint_amps = ControlAmplitudes::from_rows(2.0 * dt, n, &vec![row; steps]).unwrap();
        let a = context(&sys, Mode::magnus()).equiprop(&magnus_amps).unwrap().u;
        let b = context(&sys, Mode::midpoint()).equiprop(&midpoint_amps).unwrap().u;
        prop_assert!(a.max_abs_diff(&b) <= 1e-13);
    }

    #[test]
    fn magnus_exponents_match_direct_formula(seed in any::<u64>(), d in 1usize..=4, n in 1usize..=3, dt in 0.01f64..0.3) {
        let be = CpuBackend::new();
        let sys = random_system(seed, d, n);
        let amps = random_amps(seed ^ 3, 3, n, dt);
        let eff = build_effective_system(&sys);
        let table = magnus_coefficients(&amps).unwrap();
        let g = be.expand_linear_combination(&eff.as_control_system().upload::<f64>(), &table.data, 1.0).unwrap().get(0).unwrap();

        let (c1, c2, c3) = (amps.row(0), amps.row(1), amps.row(2));
        let h0 = sys.drift();
        let hs = sys.controls();
        let plus_i = Complex64::new(0.0, 1.0);
        let w = dt * dt / 3.0;
        let mut direct = h0.scale_real(2.0 * dt);
        for k in 0..n {
            direct = direct.add(&hs[k].scale_real(dt * (c1[k] + 4.0 * c2[k] + c3[k]) / 3.0)).unwrap();
            let comm = commutator(h0, &hs[k]).unwrap().scale(plus_i);
            direct = direct.add(&comm.scale_real(w * (c3[k] - c1[k]))).unwrap();
            for l in k + 1..n {
                let comm = commutator(&hs[k], &hs[l]).unwrap().scale(plus_i);
                direct = direct.add(&comm.scale_real(w * (c1[k] * c3[l] - c3[k] * c1[l]))).unwrap();
            }
        }
        let beta = magnus_spectral_bound(&eff, dt);
        prop_assert!(g.max_abs_diff(&direct) <= 1e-14 * beta.max(1.0));
        prop_assert!(g.one_norm() <= beta * (1.0 + 1e-14));
        // −iG anti-Hermitian ⇔ G Hermitian
        prop_assert!(g.hermitian_defect() <= 1e-12 * beta);
    }

    #[test]
    fn composition_over_split(seed in any::<u64>(), d in 1usize..=4, n in 0usize..=2, pts in 2usize..60, cut in 0.0f64..1.0, dt in 0.01f64..0.2) {
        let sys = random_system(seed, d, n);
        let amps = random_amps(seed ^ 9, pts, n, dt);
        let split = ((pts as f64 * cut) as usize).min(pts);
        let mut ctx = context(&sys, Mode::midpoint());
        let whole = ctx.equiprop(&amps).unwrap().u;
        let first = ctx.equiprop(&amps.slice_rows(0, split).unwrap()).unwrap().u;
        let second = ctx.equiprop(&amps.slice_rows(split, pts).unwrap()).unwrap().u;
        prop_assert!(whole.max_abs_diff(&second.matmul(&first).unwrap()) <= 1e-12);
    }

    #[test]
    fn norm_and_trace_preserved(seed in any::<u64>(), d in 1usize..=6, n in 0usize..=3, pts in 1usize..200) {
        let sys = random_system(seed, d, n);
        let amps = random_amps(seed ^ 11, pts, n, 0.05);
        let result = context(&sys, Mode::midpoint()).equiprop(&amps).unwrap();
        let rounds = (pts as f64).log2().ceil().max(1.0);
        prop_assert!(result.u.unitarity_defect() <= 64.0 * f64::EPSILON * d as f64 * rounds * 4.0);

        let mut r = rng(seed ^ 13);
        let psi: Vec<Complex64> = (0..d).map(|_| Complex64::new(r.random(), r.random())).collect();
        let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let out = result.apply_state(&psi).unwrap();
        prop_assert!((norm(&out) - norm(&psi)).abs() <= 1e-12 * norm(&psi));

        let h = random_hermitian(&mut r, d);
        let rho = h.matmul(&h).unwrap();
        let QuantumState::Mixed(evolved) = result.apply(&QuantumState::Mixed(rho.clone())).unwrap() else { unreachable!() };
        prop_assert!((evolved.trace() - rho.trace()).norm() <= 1e-12 * rho.trace().norm());
    }

    #[test]
    fn equiprop_all_ends_at_total(seed in any::<u64>(), d in 1usize..=3, pts in 1usize..40) {
        let sys = random_system(seed, d, 1);
        let amps = random_amps(seed ^ 5, pts, 1, 0.1);
        let mut ctx = context(&sys, Mode::midpoint());
        let all = ctx.equiprop_all(&amps).unwrap();
        let total = ctx.equiprop(&amps).unwrap().u;
        prop_assert_eq!(all.count(), pts);
        prop_assert!(all.get(pts - 1).unwrap().max_abs_diff(&total) <= 1e-13);
    }
}

#[test]
fn pairwise_equals_sequential_for_every_length() {
    let be = CpuBackend::new();
    let mut r = rng(2024);
    for n in 1..=64 {
        let us: Vec<_> = (0..n).map(|_| random_unitary(&mut r, 4)).collect();
        let batch = MatrixBatch::from_matrices(&us).unwrap();
        let pairwise = reduce_pairwise(&be, &batch).unwrap();
        let sequential = accumulate(&batch).pop().unwrap();
        assert!(pairwise.max_abs_diff(&sequential) <= 1e-13, "n = {n}");
    }
}

#[test]
fn pairwise_keeps_time_order() {
    let be = CpuBackend::new();
    let mut r = rng(7);
    let (a, b) = (random_unitary(&mut r, 3), random_unitary(&mut r, 3));
    let batch = MatrixBatch::from_matrices(&[a.clone(), b.clone()]).unwrap();
    let u = reduce_pairwise(&be, &batch).unwrap();
    assert_eq!(u, b.matmul(&a).unwrap());
    assert!(u.max_abs_diff(&a.matmul(&b).unwrap()) > 1e-3);
}

#[test]
fn sequential_reduction_mode_agrees() {
    let sys = random_system(1, 3, 2);
    let amps = random_amps(2, 37, 2, 0.05);
    let mut ctx = context(&sys, Mode::midpoint());
    let pairwise = ctx.equiprop(&amps).unwrap().u;
    ctx.set_reduction(batchprop::Reduction::Sequential);
    let sequential = ctx.equiprop(&amps).unwrap().u;
    assert!(pairwise.max_abs_diff(&sequential) <= 1e-13);
}
