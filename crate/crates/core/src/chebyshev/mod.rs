//! Batched matrix exponential `exp(−iG)` for Hermitian `G` via a truncated
//! Chebyshev series, evaluated with the Clenshaw recurrence.
//!
//! With the spectrum of `G` inside `[α, β]` and `X = (2/(β−α))(G − (α+β)/2·I)`,
//!
//! ```text
//! exp(−iG) ≈ e^{−i(α+β)/2} [a₀ I + 2 Σ_{k=1}^{m} a_k T_k(X)],   a_k = (−i)^k J_k((β−α)/2)
//! ```
//!
//! The truncation order `m` is picked so that the a-priori error estimate
//! [`chebyshev_error`] stays below the unit roundoff of the working precision.

pub mod bessel;

use num_complex::{Complex, Complex64};
use num_traits::One;

use crate::error::{Error, Result};
use crate::linalg::{BatchBackend, MatrixBatch, Precision, Real};

pub use bessel::{bessel_j, bessel_j_sequence};

/// Truncation orders the automatic selection chooses from.
pub const M_MAX_GRID: [usize; 12] = [3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25];

/// Beyond this ratio `span/(4m+4)` the error estimate stops growing with the span
/// and is not trusted.
const ESTIMATE_VALID_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A-priori truncation error of the order-`m` series for a spectrum of width `span`:
/// `4 (e^{1−q²} q)^{m+1}` with `q = span/(4m+4)`.
pub fn chebyshev_error(m: usize, span: f64) -> f64 {
    let q = span / (4.0 * m as f64 + 4.0);
    4.0 * ((1.0 - q * q).exp() * q).powi(m as i32 + 1)
}

fn order_admits(m: usize, span: f64, target: f64) -> bool {
    span / (4.0 * m as f64 + 4.0) <= ESTIMATE_VALID_RATIO && chebyshev_error(m, span) <= target
}

/// Largest `‖G‖` such that the order-`m` series with `α = −‖G‖`, `β = ‖G‖` meets
/// the precision target. Solved by bisection.
pub fn max_exponent_norm(m: usize, precision: Precision) -> f64 {
    let target = precision.unit_roundoff();
    // the estimate increases monotonically in the norm up to this point
    let mut hi = ESTIMATE_VALID_RATIO * (4.0 * m as f64 + 4.0) / 2.0;
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chebyshev_error(m, 2.0 * mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    lo
}

/// Smallest order on [`M_MAX_GRID`] reaching machine precision for a spectrum in
/// `[−norm_bound, norm_bound]`.
pub fn select_m_max(norm_bound: f64, precision: Precision) -> Result<usize> {
    if !(norm_bound >= 0.0) || !norm_bound.is_finite() {
        return Err(Error::Domain(format!("norm bound {norm_bound} is not a finite non-negative number")));
    }
    let target = precision.unit_roundoff();
    let span = 2.0 * norm_bound;
    M_MAX_GRID
        .iter()
        .copied()
        .find(|&m| order_admits(m, span, target))
        .ok_or_else(|| step_too_large(norm_bound, *M_MAX_GRID.last().unwrap(), precision))
}

fn step_too_large(norm: f64, m: usize, precision: Precision) -> Error {
    let capability = max_exponent_norm(m, precision);
    Error::StepTooLarge {
        norm,
        capability,
        m_max: m,
        shrink: norm / capability,
    }
}

/// Spectral interval, truncation order and series coefficients for one batch exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevPlan {
    pub alpha: f64,
    pub beta: f64,
    pub m_max: usize,
    /// `a_k = (−i)^k J_k((β−α)/2)`, `k = 0..=m_max`, kept in FP64.
    pub coeffs: Vec<Complex64>,
    /// `e^{−i(α+β)/2}`.
    pub phase: Complex64,
    pub precision: Precision,
    /// Error estimate for this order and span.
    pub predicted_error: f64,
}

/// Plan with the automatically selected order for spectrum `[alpha, beta]`.
pub fn make_plan(alpha: f64, beta: f64, precision: Precision) -> Result<ChebyshevPlan> {
    check_interval(alpha, beta)?;
    let m = select_m_max(0.5 * (beta - alpha), precision)?;
    build_plan(alpha, beta, m, precision)
}

/// Plan with a caller-chosen odd order. Fails with a step-too-large error when
/// the order cannot reach the precision target for this spectrum.
pub fn make_plan_with_order(
    alpha: f64,
    beta: f64,
    m_max: usize,
    precision: Precision,
) -> Result<ChebyshevPlan> {
    check_interval(alpha, beta)?;
    if m_max % 2 == 0 || m_max > bessel::MAX_ORDER {
        return Err(Error::Config(format!(
            "m_max must be odd and at most {}, got {m_max}",
            bessel::MAX_ORDER
        )));
    }
    if !order_admits(m_max, beta - alpha, precision.unit_roundoff()) {
        return Err(step_too_large(0.5 * (beta - alpha), m_max, precision));
    }
    build_plan(alpha, beta, m_max, precision)
}

fn check_interval(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha <= beta) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "spectral interval [{alpha}, {beta}] is empty or not finite"
        )));
    }
    Ok(())
}

fn build_plan(alpha: f64, beta: f64, m_max: usize, precision: Precision) -> Result<ChebyshevPlan> {
    let span = beta - alpha;
    let j = bessel_j_sequence(m_max, 0.5 * span)?;
    let mut rot = Complex64::one();
    let coeffs = j
        .iter()
        .map(|&jk| {
            let a = rot * jk;
            rot *= Complex64::new(0.0, -1.0);
            a
        })
        .collect();
    let mid = 0.5 * (alpha + beta);
    Ok(ChebyshevPlan {
        alpha,
        beta,
        m_max,
        coeffs,
        phase: Complex64::new(mid.cos(), -mid.sin()),
        precision,
        predicted_error: chebyshev_error(m_max, span),
    })
}

/// The three working batches of the exponential: the shifted argument `X` and
/// the two Clenshaw accumulators. Reused across calls; capacity only grows.
#[derive(Debug, Clone)]
pub struct ExpWorkspace<T> {
    x: MatrixBatch<T>,
    d0: MatrixBatch<T>,
    d1: MatrixBatch<T>,
}

impl<T: Real> Default for ExpWorkspace<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> ExpWorkspace<T> {
    pub fn new() -> Self {
        ExpWorkspace {
            x: MatrixBatch::zeros(1, 0),
            d0: MatrixBatch::zeros(1, 0),
            d1: MatrixBatch::zeros(1, 0),
        }
    }

    fn prepare(&mut self, dim: usize, count: usize) {
        for b in [&mut self.x, &mut self.d0, &mut self.d1] {
            b.reshape(dim, count);
        }
        self.d0.fill_zero();
        self.d1.fill_zero();
    }

    /// Result of the last [`expm_batch`] call.
    pub fn result(&self) -> &MatrixBatch<T> {
        &self.d1
    }

    /// Result of the last exponential plus a scratch batch of the same shape.
    pub(crate) fn result_and_scratch(&mut self) -> (&mut MatrixBatch<T>, &mut MatrixBatch<T>) {
        (&mut self.d1, &mut self.d0)
    }
}

/// `U[k] = exp(−i G[k])` for every slice, written into the workspace.
///
/// Each `G[k]` must be Hermitian with spectrum inside `[plan.alpha, plan.beta]`.
/// Issues exactly `plan.m_max + 1` batched GEMM calls.
pub fn expm_batch<'w, T: Real, B: BatchBackend>(
    backend: &B,
    g: &MatrixBatch<T>,
    plan: &ChebyshevPlan,
    ws: &'w mut ExpWorkspace<T>,
) -> Result<&'w MatrixBatch<T>> {
    if plan.m_max % 2 == 0 || plan.coeffs.len() != plan.m_max + 1 {
        return Err(Error::Config(format!(
            "plan order {} must be odd with {} coefficients",
            plan.m_max,
            plan.m_max + 1
        )));
    }
    let (d, n) = (g.dim(), g.count());
    ws.prepare(d, n);

    // X = (2/(β−α)) (G − (α+β)/2 I); a zero-width spectrum leaves X = 0.
    let span = plan.beta - plan.alpha;
    if span > 0.0 {
        let scale = T::of(2.0 / span);
        for k in 0..n {
            for (dst, &src) in ws.x.matrix_mut(k).iter_mut().zip(g.matrix(k)) {
                *dst = src * scale;
            }
        }
        let mid = 0.5 * (plan.alpha + plan.beta);
        if mid != 0.0 {
            let shift = Complex::new(T::of(-mid * 2.0 / span), T::zero());
            backend.diagonal_add_batched(ws.x.view_mut(), shift)?;
        }
    } else {
        ws.x.fill_zero();
    }

    // D_k = a_k I + 2 X D_{k+1} − D_{k+2}, two steps per iteration over the
    // (d0, d1) pair. The last step folds in −D₂ once more so that d1 ends up
    // holding D₀ − D₂.
    let two = Complex::new(T::of(2.0), T::zero());
    let minus_one = Complex::new(-T::one(), T::zero());
    let minus_two = Complex::new(T::of(-2.0), T::zero());
    let coeff = |k: usize| crate::linalg::cast_complex::<f64, T>(plan.coeffs[k]);
    let mut k = plan.m_max as isize;
    while k >= 0 {
        let ku = k as usize;
        backend.gemm_strided_batched(two, ws.x.view(), ws.d1.view(), minus_one, ws.d0.view_mut())?;
        backend.diagonal_add_batched(ws.d0.view_mut(), coeff(ku))?;

        let ku = ku - 1;
        let accumulate = if ku == 0 { minus_two } else { minus_one };
        backend.gemm_strided_batched(two, ws.x.view(), ws.d0.view(), accumulate, ws.d1.view_mut())?;
        backend.diagonal_add_batched(ws.d1.view_mut(), coeff(ku))?;
        k -= 2;
    }

    let phase: Complex<T> = crate::linalg::cast_complex(plan.phase);
    if phase != Complex::one() {
        ws.d1.as_mut_slice().iter_mut().for_each(|z| *z = *z * phase);
    }
    Ok(&ws.d1)
}

/// [`expm_batch`] after verifying every slice is Hermitian to within `tolerance`
/// (absolute, elementwise).
pub fn expm_batch_checked<'w, T: Real, B: BatchBackend>(
    backend: &B,
    g: &MatrixBatch<T>,
    plan: &ChebyshevPlan,
    ws: &'w mut ExpWorkspace<T>,
    tolerance: f64,
) -> Result<&'w MatrixBatch<T>> {
    for k in 0..g.count() {
        let defect = g.get(k)?.hermitian_defect().as_f64();
        if defect > tolerance {
            return Err(Error::NotHermitian {
                name: format!("slice {k}"),
                asymmetry: defect,
                tolerance,
            });
        }
    }
    expm_batch(backend, g, plan, ws)
}
