//! Control-system model `H(t) = H₀ + Σᵢ cᵢ(t) Hᵢ` and construction of the
//! per-slice exponents `G`.
//!
//! Sample convention: under [`Quadrature::Midpoint`], amplitude row `k` is taken
//! as the value of the controls over the whole slice `[kΔt, (k+1)Δt)`. Callers
//! sampling a continuous pulse should evaluate it at the slice centre
//! `(k + ½)Δt` to get a second-order scheme; sampling at the left edge drops
//! the method to first order.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{BatchBackend, Matrix, MatrixBatch, Real};

/// Relative Hermiticity tolerance applied at ingest, scaled by `‖H‖₁`.
pub const HERMITIAN_RTOL: f64 = 1e-12;

/// Drift Hamiltonian plus control Hamiltonians, all Hermitian and `dim × dim`, in FP64.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSystem {
    dim: usize,
    drift: Matrix<f64>,
    controls: Vec<Matrix<f64>>,
    norms: Vec<f64>,
}

pub(crate) fn check_hermitian(name: &str, m: &Matrix<f64>) -> Result<()> {
    let norm = m.one_norm();
    let tolerance = HERMITIAN_RTOL * norm;
    let asymmetry = m.hermitian_defect();
    if asymmetry > tolerance {
        return Err(Error::NotHermitian {
            name: name.to_owned(),
            asymmetry,
            tolerance,
        });
    }
    Ok(())
}

impl ControlSystem {
    pub fn new(drift: Matrix<f64>, controls: Vec<Matrix<f64>>) -> Result<Self> {
        let dim = drift.dim();
        if dim == 0 {
            return Err(Error::shape("Hamiltonian dimension must be at least 1"));
        }
        check_hermitian("drift", &drift)?;
        for (i, h) in controls.iter().enumerate() {
            if h.dim() != dim {
                return Err(Error::shape(format!(
                    "control {} is {1}x{1}, drift is {dim}x{dim}",
                    i + 1,
                    h.dim()
                )));
            }
            check_hermitian(&format!("control {}", i + 1), h)?;
        }
        let norms = std::iter::once(&drift)
            .chain(&controls)
            .map(Matrix::one_norm)
            .collect();
        Ok(ControlSystem {
            dim,
            drift,
            controls,
            norms,
        })
    }

    pub fn drift_only(drift: Matrix<f64>) -> Result<Self> {
        Self::new(drift, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &Matrix<f64> {
        &self.drift
    }

    pub fn controls(&self) -> &[Matrix<f64>] {
        &self.controls
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// `‖H₀‖₁, ‖H₁‖₁, …, ‖H_N‖₁`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Drift followed by the controls.
    pub fn matrices(&self) -> impl Iterator<Item = &Matrix<f64>> {
        std::iter::once(&self.drift).chain(&self.controls)
    }

    /// All matrices rounded to the working precision.
    pub fn upload<T: Real>(&self) -> Vec<Matrix<T>> {
        self.matrices().map(Matrix::cast).collect()
    }
}

/// Control amplitudes `cᵢ(t_k)` on an equidistant grid, stored row-major (`pts × N`).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlAmplitudes {
    pts: usize,
    dt: f64,
    n_controls: usize,
    values: Vec<f64>,
}

impl ControlAmplitudes {
    pub fn new(pts: usize, dt: f64, n_controls: usize, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive and finite, got {dt}")));
        }
        if values.len() != pts * n_controls {
            return Err(Error::shape(format!(
                "amplitude table has {} values, expected {pts} x {n_controls}",
                values.len()
            )));
        }
        Ok(ControlAmplitudes {
            pts,
            dt,
            n_controls,
            values,
        })
    }

    pub fn from_rows(dt: f64, n_controls: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if let Some(k) = rows.iter().position(|r| r.len() != n_controls) {
            return Err(Error::shape(format!(
                "amplitude row {k} has {} entries, expected {n_controls}",
                rows[k].len()
            )));
        }
        Self::new(rows.len(), dt, n_controls, rows.concat())
    }

    /// `pts` samples for a drift-only system.
    pub fn drift_only(pts: usize, dt: f64) -> Result<Self> {
        Self::new(pts, dt, 0, Vec::new())
    }

    /// Sample `n_controls` functions of time at `t_k = t0 + k·dt`, `k < pts`.
    pub fn sample(
        pts: usize,
        dt: f64,
        t0: f64,
        n_controls: usize,
        f: impl Fn(f64, &mut [f64]),
    ) -> Result<Self> {
        let mut values = vec![0.0; pts * n_controls];
        if n_controls > 0 {
            for (k, row) in values.chunks_mut(n_controls).enumerate() {
                f(t0 + k as f64 * dt, row);
            }
        }
        Self::new(pts, dt, n_controls, values)
    }

    pub fn pts(&self) -> usize {
        self.pts
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_controls..(k + 1) * self.n_controls]
    }

    /// Rows `start..end` as a new table with the same time step.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.pts {
            return Err(Error::IndexOutOfRange {
                index: end,
                count: self.pts,
            });
        }
        let n = self.n_controls;
        Self::new(end - start, self.dt, n, self.values[start * n..end * n].to_vec())
    }
}

/// First amplitude outside `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeViolation {
    pub sample: usize,
    pub control: usize,
    pub value: f64,
}

impl From<AmplitudeViolation> for Error {
    fn from(v: AmplitudeViolation) -> Self {
        Error::AmplitudeBound {
            sample: v.sample,
            control: v.control,
            value: v.value,
        }
    }
}

/// Ok when every amplitude lies in the closed interval `[−1, 1]`.
pub fn validate_amplitudes(amps: &ControlAmplitudes) -> Result<(), AmplitudeViolation> {
    let n = amps.n_controls.max(1);
    match amps.values.iter().position(|v| !(v.abs() <= 1.0)) {
        None => Ok(()),
        Some(idx) => Err(AmplitudeViolation {
            sample: idx / n,
            control: idx % n,
            value: amps.values[idx],
        }),
    }
}

/// How slice exponents are formed from the amplitude samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Quadrature {
    /// One slice of width Δt per sample.
    #[default]
    Midpoint,
    /// One slice of width 2Δt per sample triple `(2j, 2j+1, 2j+2)`, weights (1, 4, 1)/3.
    Simpson,
}

impl Quadrature {
    pub fn as_str(self) -> &'static str {
        match self {
            Quadrature::Midpoint => "midpoint",
            Quadrature::Simpson => "simpson",
        }
    }
}

impl FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "midpoint" => Ok(Quadrature::Midpoint),
            "simpson" => Ok(Quadrature::Simpson),
            other => Err(Error::Config(format!(
                "unknown quadrature `{other}` (expected midpoint or simpson)"
            ))),
        }
    }
}

/// `β = Δt Σ_{i=0..N} ‖Hᵢ‖₁`; with `|cᵢ| ≤ 1` every slice exponent has spectrum in `[−β, β]`.
pub fn spectral_bound(system: &ControlSystem, dt: f64) -> f64 {
    dt * system.norms().iter().sum::<f64>()
}

/// Bound for the three-point rule, whose slices span `2Δt`.
pub fn simpson_spectral_bound(system: &ControlSystem, dt: f64) -> f64 {
    2.0 * spectral_bound(system, dt)
}

/// Number of slices a table of `pts` samples produces under `quadrature`.
pub fn slice_count(pts: usize, quadrature: Quadrature) -> Result<usize> {
    match quadrature {
        Quadrature::Midpoint => Ok(pts),
        Quadrature::Simpson => three_point_steps(pts),
    }
}

pub(crate) fn three_point_steps(pts: usize) -> Result<usize> {
    if pts == 0 {
        Ok(0)
    } else if pts % 2 == 0 || pts < 3 {
        Err(Error::SamplingParity(format!(
            "three-point sampling needs an odd number of samples, at least 3 (got {pts})"
        )))
    } else {
        Ok((pts - 1) / 2)
    }
}

/// Coefficient table (`slices × (N+1)`, drift weight first) and the scale it is
/// applied with, such that `G[k] = scale · Σᵢ table[k][i] Hᵢ`.
pub fn exponent_coefficients(
    amps: &ControlAmplitudes,
    quadrature: Quadrature,
) -> Result<(Vec<f64>, f64)> {
    let n = amps.n_controls();
    let dt = amps.dt();
    match quadrature {
        Quadrature::Midpoint => {
            let mut table = Vec::with_capacity(amps.pts() * (n + 1));
            for k in 0..amps.pts() {
                table.push(1.0);
                table.extend_from_slice(amps.row(k));
            }
            Ok((table, dt))
        }
        Quadrature::Simpson => {
            let steps = three_point_steps(amps.pts())?;
            let mut table = Vec::with_capacity(steps * (n + 1));
            for j in 0..steps {
                let (c1, c2, c3) = (amps.row(2 * j), amps.row(2 * j + 1), amps.row(2 * j + 2));
                table.push(2.0 * dt);
                for i in 0..n {
                    table.push(simpson_weight(dt, c1[i], c2[i], c3[i]));
                }
            }
            Ok((table, 1.0))
        }
    }
}

#[inline]
pub(crate) fn simpson_weight(dt: f64, c1: f64, c2: f64, c3: f64) -> f64 {
    dt * (c1 / 3.0 + 4.0 * c2 / 3.0 + c3 / 3.0)
}

/// One exponent `G` per slice.
///
/// Midpoint: `G[k] = Δt (H₀ + Σᵢ cᵢ(t_k) Hᵢ)`. Simpson: `G[j] = 2Δt H₀ + Δt Σᵢ
/// (cᵢ⁽¹⁾ + 4cᵢ⁽²⁾ + cᵢ⁽³⁾)/3 Hᵢ` over samples `(2j, 2j+1, 2j+2)`.
pub fn build_exponent_batch<T: Real, B: BatchBackend>(
    backend: &B,
    system: &ControlSystem,
    amps: &ControlAmplitudes,
    quadrature: Quadrature,
) -> Result<MatrixBatch<T>> {
    build_exponent_batch_uploaded(backend, &system.upload::<T>(), amps, quadrature)
}

pub(crate) fn build_exponent_batch_uploaded<T: Real, B: BatchBackend>(
    backend: &B,
    matrices: &[Matrix<T>],
    amps: &ControlAmplitudes,
    quadrature: Quadrature,
) -> Result<MatrixBatch<T>> {
    if amps.n_controls() + 1 != matrices.len() {
        return Err(Error::shape(format!(
            "amplitude table has {} controls, system has {}",
            amps.n_controls(),
            matrices.len() - 1
        )));
    }
    validate_amplitudes(amps)?;
    let (table, scale) = exponent_coefficients(amps, quadrature)?;
    expand_table(backend, matrices, &table, scale)
}

pub(crate) fn expand_table<T: Real, B: BatchBackend>(
    backend: &B,
    matrices: &[Matrix<T>],
    table: &[f64],
    scale: f64,
) -> Result<MatrixBatch<T>> {
    let table: Vec<T> = table.iter().map(|&c| T::of(c)).collect();
    backend.expand_linear_combination(matrices, &table, T::of(scale))
}
