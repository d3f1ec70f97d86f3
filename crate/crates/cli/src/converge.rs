//! Convergence study on a circularly driven qubit with a closed-form propagator.

use batchprop::hamiltonian::{ControlAmplitudes, ControlSystem, Quadrature};
use batchprop::linalg::{Matrix, Precision};
use batchprop::{Config, Error, IntegratorContext, Mode, Result};
use num_complex::Complex64;

/// `H(t) = ω₀/2 σz + cos(ω_rf t) ω₁/2 σx + sin(ω_rf t) ω₁/2 σy` over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenQubit {
    pub omega0: f64,
    pub omega1: f64,
    pub omega_rf: f64,
    pub total_time: f64,
}

impl Default for DrivenQubit {
    fn default() -> Self {
        DrivenQubit {
            omega0: 1.0,
            omega1: 0.1,
            omega_rf: 1.0,
            total_time: 6.0,
        }
    }
}

type Su2 = [[Complex64; 2]; 2];

fn su2_mul(a: &Su2, b: &Su2) -> Su2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `exp(−i τ (n·σ))`.
fn su2_exp(n: [f64; 3], tau: f64) -> Su2 {
    let r = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if r == 0.0 {
        return [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    }
    let (s, c) = (r * tau).sin_cos();
    let [x, y, z] = n.map(|v| v / r);
    // c I − i s (x σx + y σy + z σz)
    [
        [Complex64::new(c, -s * z), Complex64::new(-s * y, -s * x)],
        [Complex64::new(s * y, -s * x), Complex64::new(c, s * z)],
    ]
}

fn su2_matrix(u: &Su2) -> Matrix<f64> {
    Matrix::from_vec(2, vec![u[0][0], u[0][1], u[1][0], u[1][1]]).expect("2×2")
}

impl DrivenQubit {
    pub fn system(&self) -> ControlSystem {
        let half1 = 0.5 * self.omega1;
        ControlSystem::new(
            Matrix::sigma_z().scale_real(0.5 * self.omega0),
            vec![Matrix::sigma_x().scale_real(half1), Matrix::sigma_y().scale_real(half1)],
        )
        .expect("Pauli matrices are Hermitian")
    }

    /// Control values `(cos ω_rf t, sin ω_rf t)`.
    pub fn controls_at(&self, t: f64) -> [f64; 2] {
        let (s, c) = (self.omega_rf * t).sin_cos();
        [c, s]
    }

    /// Amplitude table for `pts` samples. Midpoint takes one sample per slice at
    /// the slice centre; three-point schemes sample the grid `jΔt` including both
    /// endpoints, so `pts` must be odd there.
    pub fn amplitudes(&self, pts: usize, quadrature: Quadrature) -> Result<ControlAmplitudes> {
        let (dt, offset) = match quadrature {
            Quadrature::Midpoint => (self.total_time / pts as f64, 0.5),
            Quadrature::Simpson => {
                if pts < 3 || pts % 2 == 0 {
                    return Err(Error::SamplingParity(format!(
                        "three-point sampling needs an odd count ≥ 3, got {pts}"
                    )));
                }
                (self.total_time / (pts - 1) as f64, 0.0)
            }
        };
        ControlAmplitudes::sample(pts, dt, offset * dt, 2, |t, row| {
            row.copy_from_slice(&self.controls_at(t))
        })
    }

    /// Closed form: `e^{−i ω_rf T σz/2} · e^{−i T ((ω₀−ω_rf) σz + ω₁ σx)/2}`.
    pub fn exact(&self) -> Matrix<f64> {
        let t = self.total_time;
        let frame = su2_exp([0.0, 0.0, 0.5 * self.omega_rf], t);
        let rotating = su2_exp([0.5 * self.omega1, 0.0, 0.5 * (self.omega0 - self.omega_rf)], t);
        su2_matrix(&su2_mul(&frame, &rotating))
    }

    /// Midpoint product of exact 2×2 slice exponentials, sampled at slice centres.
    pub fn midpoint_reference(&self, steps: usize) -> Matrix<f64> {
        let dt = self.total_time / steps as f64;
        let mut u = su2_exp([0.0; 3], 0.0);
        for k in 0..steps {
            let [c, s] = self.controls_at((k as f64 + 0.5) * dt);
            let n = [0.5 * self.omega1 * c, 0.5 * self.omega1 * s, 0.5 * self.omega0];
            u = su2_mul(&su2_exp(n, dt), &u);
        }
        su2_matrix(&u)
    }
}

pub const ORACLE_CHECK_STEPS: usize = 10_000_000;
pub const ORACLE_CHECK_TOL: f64 = 1e-8;

/// Cross-check the closed form against a fine independent reference before using it.
pub fn validate_oracle(q: &DrivenQubit) -> Result<f64> {
    let diff = q.exact().max_abs_diff(&q.midpoint_reference(ORACLE_CHECK_STEPS));
    if diff > ORACLE_CHECK_TOL {
        return Err(Error::Domain(format!(
            "analytic propagator disagrees with the {ORACLE_CHECK_STEPS}-step reference by {diff:e}"
        )));
    }
    Ok(diff)
}

/// Multiply `u` by the global phase that makes `det(u) = det(reference)`. Of the
/// two square-root branches the one closer to `reference` is kept.
pub fn phase_align(u: &Matrix<f64>, reference: &Matrix<f64>) -> Matrix<f64> {
    let det2 = |m: &Matrix<f64>| m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    assert_eq!(u.dim(), 2, "phase alignment is implemented for 2×2 propagators");
    let half = 0.5 * (det2(reference) / det2(u)).arg();
    let a = u.scale(Complex64::from_polar(1.0, half));
    let b = a.scale_real(-1.0);
    if a.max_abs_diff(reference) <= b.max_abs_diff(reference) {
        a
    } else {
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergeOptions {
    pub qubit: DrivenQubit,
    pub mode: Mode,
    pub precision: Precision,
    pub phase_align: bool,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        ConvergeOptions {
            qubit: DrivenQubit::default(),
            mode: Mode::midpoint(),
            precision: Precision::Fp64,
            phase_align: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub pts: usize,
    pub dt: f64,
    pub error: f64,
    pub unitarity_defect: f64,
    /// `|tr(UρU†) − tr(ρ)|` for a fixed mixed state.
    pub trace_defect: f64,
}

/// Fixed full-rank density matrix used for the trace check.
pub fn probe_density() -> Matrix<f64> {
    Matrix::from_vec(
        2,
        vec![
            Complex64::new(0.75, 0.0),
            Complex64::new(0.25, -0.1),
            Complex64::new(0.25, 0.1),
            Complex64::new(0.25, 0.0),
        ],
    )
    .expect("2×2")
}

/// Sample counts log-spaced over `[lo, hi]` with `per_decade` points per decade.
pub fn log_spaced(lo: usize, hi: usize, per_decade: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
    let n = ((b - a) * per_decade as f64).round() as usize;
    let mut out: Vec<usize> = (0..=n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / n.max(1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Nearest admissible sample count for the mode: odd and ≥ 3 for three-point schemes.
pub fn admissible_pts(pts: usize, quadrature: Quadrature) -> usize {
    match quadrature {
        Quadrature::Midpoint => pts.max(1),
        Quadrature::Simpson => (pts | 1).max(3),
    }
}

/// One run per sample count; errors are max elementwise moduli against the closed form.
pub fn run_converge(opts: &ConvergeOptions, pts_list: &[usize]) -> Result<Vec<ConvergencePoint>> {
    let exact = opts.qubit.exact();
    let rho = probe_density();
    let mut ctx = IntegratorContext::create(Config::new(opts.precision))?;
    ctx.set_hamiltonian(opts.qubit.system(), opts.mode)?;
    let mut out = Vec::with_capacity(pts_list.len());
    let mut last = None;
    for &requested in pts_list {
        let pts = admissible_pts(requested, opts.mode.quadrature);
        if last == Some(pts) {
            continue;
        }
        last = Some(pts);
        let amps = opts.qubit.amplitudes(pts, opts.mode.quadrature)?;
        let result = ctx.equiprop(&amps)?;
        let trace_defect = (result.apply_density(&rho)?.trace() - rho.trace()).norm();
        let mut u = result.u;
        if opts.phase_align {
            u = phase_align(&u, &exact);
        }
        out.push(ConvergencePoint {
            pts,
            dt: amps.dt(),
            error: u.max_abs_diff(&exact),
            unitarity_defect: u.unitarity_defect(),
            trace_defect,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    /// `d log(error) / d log(Δt)`.
    pub slope: f64,
    pub first: usize,
    pub last: usize,
    pub decades: f64,
}

/// Least-squares slope of `log error` against `log Δt` over the longest run of
/// strictly decreasing errors. The run is cut where the local slope first
/// collapses below half its median, which marks the approach to the precision
/// floor.
pub fn fit_slope(points: &[ConvergencePoint]) -> Option<SlopeFit> {
    let (mut best, mut start) = ((0, 0), 0);
    for i in 1..=points.len() {
        let continues = i < points.len() && points[i].error < points[i - 1].error && points[i].error > 0.0;
        if !continues {
            if i - start > best.1 - best.0 {
                best = (start, i);
            }
            start = i;
        }
    }
    let run = &points[best.0..best.1];
    if run.len() < 3 {
        return None;
    }
    let local = |a: &ConvergencePoint, b: &ConvergencePoint| {
        (a.error.ln() - b.error.ln()) / (a.dt.ln() - b.dt.ln())
    };
    let slopes: Vec<f64> = run.windows(2).map(|w| local(&w[0], &w[1])).collect();
    let mut sorted = slopes.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let end = slopes
        .iter()
        .position(|&s| s < 0.5 * median)
        .map_or(run.len(), |i| (i + 1).max(3));
    let run = &run[..end];

    let xs: Vec<f64> = run.iter().map(|p| p.dt.ln()).collect();
    let ys: Vec<f64> = run.iter().map(|p| p.error.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(SlopeFit {
        slope: sxy / sxx,
        first: run[0].pts,
        last: run[run.len() - 1].pts,
        decades: (run[0].dt / run[run.len() - 1].dt).log10(),
    })
}

pub fn write_csv<W: std::io::Write>(out: W, points: &[ConvergencePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    w.write_record(["pts", "error"]).map_err(io)?;
    for p in points {
        w.write_record([p.pts.to_string(), format!("{:e}", p.error)]).map_err(io)?;
    }
    w.flush().map_err(|source| Error::Io {
        context: "csv output".into(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_is_unitary_and_matches_static_limit() {
        let q = DrivenQubit::default();
        assert!(q.exact().unitarity_defect() < 1e-15);
        // no drive: pure precession e^{−iω₀Tσz/2}
        let still = DrivenQubit { omega1: 0.0, ..q };
        let phase = Complex64::new(0.0, -3.0).exp();
        assert!((still.exact()[(0, 0)] - phase).norm() < 1e-15);
    }

    #[test]
    fn reference_converges_to_closed_form() {
        let q = DrivenQubit::default();
        let coarse = q.exact().max_abs_diff(&q.midpoint_reference(100));
        let fine = q.exact().max_abs_diff(&q.midpoint_reference(1000));
        assert!((coarse / fine - 100.0).abs() < 5.0, "{coarse:e} {fine:e}");
    }

    #[test]
    fn sampling_grids() {
        let q = DrivenQubit::default();
        let mid = q.amplitudes(4, Quadrature::Midpoint).unwrap();
        assert_eq!(mid.dt(), 1.5);
        assert_eq!(mid.row(0), &q.controls_at(0.75));
        let three = q.amplitudes(5, Quadrature::Simpson).unwrap();
        assert_eq!(three.dt(), 1.5);
        assert_eq!(three.row(4), &q.controls_at(6.0));
        assert!(q.amplitudes(4, Quadrature::Simpson).is_err());
        assert_eq!(admissible_pts(10, Quadrature::Simpson), 11);
        assert_eq!(admissible_pts(11, Quadrature::Simpson), 11);
    }

    #[test]
    fn log_spacing() {
        assert_eq!(log_spaced(10, 1000, 1), vec![10, 100, 1000]);
        let pts = log_spaced(10, 1_000_000, 4);
        assert_eq!(pts.len(), 21);
        assert_eq!(*pts.last().unwrap(), 1_000_000);
    }

    #[test]
    fn slope_fit_recovers_power_law_and_drops_floor() {
        let mut pts: Vec<ConvergencePoint> = (1..=8)
            .map(|i| {
                let dt = 10f64.powf(-0.5 * i as f64);
                ConvergencePoint { pts: i, dt, error: 3.0 * dt.powi(4), unitarity_defect: 0.0, trace_defect: 0.0 }
            })
            .collect();
        // floor: barely decreasing, then rising
        pts.push(ConvergencePoint { pts: 9, dt: 10f64.powf(-4.5), error: pts[7].error * 0.9, unitarity_defect: 0.0, trace_defect: 0.0 });
        pts.push(ConvergencePoint { pts: 10, dt: 1e-5, error: pts[7].error * 2.0, unitarity_defect: 0.0, trace_defect: 0.0 });
        let fit = fit_slope(&pts).unwrap();
        assert!((fit.slope - 4.0).abs() < 1e-12, "{fit:?}");
        assert_eq!((fit.first, fit.last), (1, 8));
    }

    #[test]
    fn phase_alignment_removes_global_phase() {
        let q = DrivenQubit::default();
        let exact = q.exact();
        let shifted = exact.scale(Complex64::from_polar(1.0, 0.3));
        assert!(phase_align(&shifted, &exact).max_abs_diff(&exact) < 1e-15);
    }

    #[test]
    fn csv_has_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[ConvergencePoint { pts: 10, dt: 0.6, error: 1e-3, unitarity_defect: 0.0, trace_defect: 0.0 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "pts,error\n10,1e-3\n");
    }
}
