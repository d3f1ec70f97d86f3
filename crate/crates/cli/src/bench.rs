//! Wall-clock timing of `equiprop` on random systems.

use std::time::Instant;

use batchprop::hamiltonian::{ControlAmplitudes, ControlSystem};
use batchprop::linalg::{Matrix, Precision};
use batchprop::{Config, IntegratorContext, Mode, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub dims: Vec<usize>,
    pub steps: Vec<usize>,
    pub precision: Precision,
    pub repeats: usize,
    pub seed: u64,
    pub n_controls: usize,
    /// Target `Δt·Σ‖Hᵢ‖₁`; fixed so every run uses the same Chebyshev order.
    pub step_norm: f64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            dims: vec![2, 4, 8, 16],
            steps: vec![1_000, 10_000, 100_000],
            precision: Precision::Fp64,
            repeats: 3,
            seed: 1,
            n_controls: 2,
            step_norm: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub dim: usize,
    pub pts: usize,
    pub seconds: f64,
}

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(d);
    for i in 0..d {
        m[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..d {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

pub fn random_problem(rng: &mut ChaCha8Rng, d: usize, n: usize, pts: usize, step_norm: f64) -> Result<(ControlSystem, ControlAmplitudes)> {
    let drift = random_hermitian(rng, d);
    let controls = (0..n).map(|_| random_hermitian(rng, d)).collect();
    let system = ControlSystem::new(drift, controls)?;
    let dt = step_norm / system.norms().iter().sum::<f64>();
    let values = (0..pts * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Ok((system, ControlAmplitudes::new(pts, dt, n, values)?))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median of `repeats` timed runs per `(dim, pts)`; setup is excluded from timing.
pub fn run_bench(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = Vec::new();
    for &dim in &opts.dims {
        for &pts in &opts.steps {
            let (system, amps) = random_problem(&mut rng, dim, opts.n_controls, pts, opts.step_norm)?;
            let mut ctx = IntegratorContext::create(Config::new(opts.precision))?;
            ctx.set_hamiltonian(system, Mode::midpoint())?;
            // warm-up sizes the workspace
            ctx.equiprop(&amps)?;
            let mut times = Vec::with_capacity(opts.repeats);
            for _ in 0..opts.repeats.max(1) {
                let start = Instant::now();
                std::hint::black_box(ctx.equiprop(&amps)?);
                times.push(start.elapsed().as_secs_f64());
            }
            rows.push(BenchRow { dim, pts, seconds: median(times) });
        }
    }
    Ok(rows)
}

/// Largest relative residual of the line `seconds = a + b·pts` that minimizes the
/// sum of squared relative residuals. Weighting by `1/seconds²` keeps the short
/// runs of a log-spaced sweep from being swamped by the long ones.
pub fn linear_fit_residual(rows: &[BenchRow]) -> f64 {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let (x, y) = (r.pts as f64, r.seconds);
        let w = 1.0 / (y * y);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let b = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    let a = (sy - b * sx) / sw;
    rows.iter()
        .map(|r| ((a + b * r.pts as f64) - r.seconds).abs() / r.seconds)
        .fold(0.0, f64::max)
}

pub fn write_csv<W: std::io::Write>(out: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dim", "pts", "seconds"])?;
    for r in rows {
        w.write_record([r.dim.to_string(), r.pts.to_string(), format!("{:.6e}", r.seconds)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_exact_line_is_zero() {
        let rows: Vec<_> = [1000, 5000, 20000]
            .iter()
            .map(|&p| BenchRow { dim: 2, pts: p, seconds: 1e-3 + 2e-6 * p as f64 })
            .collect();
        assert!(linear_fit_residual(&rows) < 1e-12);
    }

    #[test]
    fn quadratic_growth_is_flagged() {
        let rows: Vec<_> = [1000, 3162, 10000, 31623, 100000]
            .iter()
            .map(|&p| BenchRow { dim: 2, pts: p, seconds: 1e-9 * (p as f64).powi(2) })
            .collect();
        assert!(linear_fit_residual(&rows) > 0.25);
    }

    #[test]
    fn problems_are_seeded() {
        let a = random_problem(&mut ChaCha8Rng::seed_from_u64(3), 4, 2, 10, 0.5).unwrap();
        let b = random_problem(&mut ChaCha8Rng::seed_from_u64(3), 4, 2, 10, 0.5).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let bound: f64 = a.0.norms().iter().sum::<f64>() * a.1.dt();
        assert!((bound - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tiny_bench_runs() {
        let opts = BenchOptions { dims: vec![2], steps: vec![16, 32], repeats: 1, ..Default::default() };
        let rows = run_bench(&opts).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.seconds > 0.0));
    }
}
