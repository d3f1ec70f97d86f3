//! Fourth-order Magnus transform.
//!
//! Over three equidistant samples `c⁽¹⁾, c⁽²⁾, c⁽³⁾` spanning `2Δt`, the slice exponent
//!
//! ```text
//! G = 2Δt H₀ + Δt Σ_k (c_k⁽¹⁾ + 4c_k⁽²⁾ + c_k⁽³⁾)/3 · H_k
//!     + i Δt²/3 Σ_k (c_k⁽³⁾ − c_k⁽¹⁾) [H₀, H_k]
//!     + i Δt²/3 Σ_{k<k'} (c_k⁽¹⁾c_k'⁽³⁾ − c_k⁽³⁾c_k'⁽¹⁾) [H_k, H_k']
//! ```
//!
//! has the same shape as the plain control decomposition once the commutators
//! are treated as additional controls. Each commutator is stored as the
//! Hermitian matrix `i[A, B]`, so the table coefficients are exactly the real
//! prefactors above.
//!
//! The sign of the commutator terms follows from the second Magnus term
//! `−½∫∫_{t₂<t₁} [H(t₁), H(t₂)]` evaluated for a Hamiltonian linear over the
//! step, which gives `+(h²/12)[H⁽¹⁾, H⁽³⁾]` in `−iG` for step length `h = 2Δt`.
//! With the opposite sign the scheme drops back to second order.

use crate::error::{Error, Result};
use crate::hamiltonian::{simpson_weight, three_point_steps, ControlAmplitudes, ControlSystem};
use crate::linalg::{Matrix, Real};

/// `AB − BA`.
pub fn commutator<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    a.matmul(b)?.sub(&b.matmul(a)?)
}

fn hermitian_commutator(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
    commutator(a, b)
        .expect("system matrices share a dimension")
        .scale(num_complex::Complex64::new(0.0, 1.0))
}

/// A control system extended by the commutator controls of the Magnus transform.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSystem {
    base: ControlSystem,
    effective: ControlSystem,
}

/// Number of effective controls for `n` original controls: `N + N + N(N−1)/2`.
pub fn effective_control_count(n: usize) -> usize {
    2 * n + n * n.saturating_sub(1) / 2
}

/// Precompute `i[H₀,H_k]` and `i[H_k,H_k']` for the system.
///
/// Effective controls are ordered `H₁…H_N`, then `i[H₀,H₁]…i[H₀,H_N]`, then
/// `i[H_k,H_k']` for `k < k'` in lexicographic order.
pub fn build_effective_system(system: &ControlSystem) -> EffectiveSystem {
    let h0 = system.drift();
    let hs = system.controls();
    let mut controls = Vec::with_capacity(effective_control_count(hs.len()));
    controls.extend(hs.iter().cloned());
    controls.extend(hs.iter().map(|hk| hermitian_commutator(h0, hk)));
    for (k, hk) in hs.iter().enumerate() {
        for hl in &hs[k + 1..] {
            controls.push(hermitian_commutator(hk, hl));
        }
    }
    let effective = ControlSystem::new(h0.clone(), controls)
        .expect("commutators of Hermitian matrices give Hermitian i[A,B]");
    EffectiveSystem {
        base: system.clone(),
        effective,
    }
}

impl EffectiveSystem {
    pub fn base(&self) -> &ControlSystem {
        &self.base
    }

    /// Drift plus effective controls, as a plain control system.
    pub fn as_control_system(&self) -> &ControlSystem {
        &self.effective
    }

    pub fn effective_controls(&self) -> &[Matrix<f64>] {
        self.effective.controls()
    }

    pub fn n_effective(&self) -> usize {
        self.effective.n_controls()
    }
}

/// Effective coefficient table: one row per Magnus step, columns
/// `[2Δt, simpson_1..N, drift_commutator_1..N, cross_(k<k')]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnusTable {
    pub steps: usize,
    pub columns: usize,
    pub data: Vec<f64>,
}

impl MagnusTable {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.columns..(j + 1) * self.columns]
    }
}

/// Step `j` uses sample rows `(2j, 2j+1, 2j+2)`; consecutive steps share endpoints.
pub fn magnus_coefficients(amps: &ControlAmplitudes) -> Result<MagnusTable> {
    let steps = three_point_steps(amps.pts())?;
    let n = amps.n_controls();
    let dt = amps.dt();
    let w = dt * dt / 3.0;
    let columns = 1 + effective_control_count(n);
    let mut data = Vec::with_capacity(steps * columns);
    for j in 0..steps {
        let (c1, c2, c3) = (amps.row(2 * j), amps.row(2 * j + 1), amps.row(2 * j + 2));
        data.push(2.0 * dt);
        data.extend((0..n).map(|k| simpson_weight(dt, c1[k], c2[k], c3[k])));
        data.extend((0..n).map(|k| w * (c3[k] - c1[k])));
        for k in 0..n {
            for l in k + 1..n {
                data.push(w * (c1[k] * c3[l] - c3[k] * c1[l]));
            }
        }
    }
    debug_assert_eq!(data.len(), steps * columns);
    Ok(MagnusTable {
        steps,
        columns,
        data,
    })
}

/// Spectral bound for Magnus exponents under `|cᵢ| ≤ 1`:
/// `2Δt Σ_{i=0..N} ‖Hᵢ‖₁ + (2Δt²/3) Σ_k ‖[H₀,H_k]‖₁ + (2Δt²/3) Σ_{k<k'} ‖[H_k,H_k']‖₁`.
pub fn magnus_spectral_bound(eff: &EffectiveSystem, dt: f64) -> f64 {
    let n = eff.base.n_controls();
    let norms = eff.effective.norms();
    let plain: f64 = eff.base.norms().iter().sum();
    let commutators: f64 = norms[1 + n..].iter().sum();
    2.0 * dt * plain + 2.0 * dt * dt / 3.0 * commutators
}

pub(crate) fn check_controls(eff: &EffectiveSystem, amps: &ControlAmplitudes) -> Result<()> {
    if amps.n_controls() != eff.base.n_controls() {
        return Err(Error::shape(format!(
            "amplitude table has {} controls, system has {}",
            amps.n_controls(),
            eff.base.n_controls()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn commutator_examples() {
        let (x, y, z) = (
            Matrix::<f64>::sigma_x(),
            Matrix::sigma_y(),
            Matrix::sigma_z(),
        );
        assert_eq!(commutator(&x, &x).unwrap(), Matrix::zeros(2));
        assert_eq!(commutator(&x, &y).unwrap(), z.scale(c(0.0, 2.0)));
        let m = Matrix::from_rows(&[vec![c(1.0, 2.0), c(0.0, 1.0)], vec![c(3.0, 0.0), c(-1.0, 0.5)]])
            .unwrap();
        assert_eq!(commutator(&Matrix::identity(2), &m).unwrap(), Matrix::zeros(2));
        assert!(commutator(&x, &Matrix::identity(3)).is_err());
    }

    #[test]
    fn effective_counts() {
        let h0 = Matrix::<f64>::sigma_z();
        let sys0 = ControlSystem::drift_only(h0.clone()).unwrap();
        assert_eq!(build_effective_system(&sys0).n_effective(), 0);

        let sys1 = ControlSystem::new(h0.clone(), vec![Matrix::sigma_x()]).unwrap();
        let eff1 = build_effective_system(&sys1);
        assert_eq!(eff1.n_effective(), 2);
        assert_eq!(eff1.effective_controls()[0], Matrix::sigma_x());

        let sys2 = ControlSystem::new(h0, vec![Matrix::sigma_x(), Matrix::sigma_y()]).unwrap();
        assert_eq!(build_effective_system(&sys2).n_effective(), 5);

        for n in 0..6 {
            // 3/2 N + N²/2
            assert_eq!(effective_control_count(n), (3 * n + n * n) / 2);
        }
    }

    #[test]
    fn stored_commutators_are_hermitian() {
        let sys = ControlSystem::new(
            Matrix::sigma_z().scale_real(0.5),
            vec![Matrix::sigma_x(), Matrix::sigma_y()],
        )
        .unwrap();
        let eff = build_effective_system(&sys);
        for m in eff.effective_controls() {
            assert_eq!(m.hermitian_defect(), 0.0);
        }
        // i[σz/2, σx] = i · iσy = −σy
        assert_eq!(eff.effective_controls()[2], Matrix::sigma_y().scale_real(-1.0));
    }

    #[test]
    fn constant_coefficients_kill_second_order_terms() {
        let amps = ControlAmplitudes::from_rows(0.1, 2, &vec![vec![0.4, -0.9]; 5]).unwrap();
        let t = magnus_coefficients(&amps).unwrap();
        assert_eq!((t.steps, t.columns), (2, 6));
        for j in 0..2 {
            let row = t.row(j);
            assert_eq!(row[0], 0.2);
            assert!((row[1] - 0.2 * 0.4).abs() < 1e-16);
            assert!((row[2] + 0.2 * 0.9).abs() < 1e-16);
            assert_eq!(&row[3..], &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn single_control_ramp() {
        let dt = 0.25;
        let amps = ControlAmplitudes::from_rows(dt, 1, &[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let t = magnus_coefficients(&amps).unwrap();
        assert_eq!(t.steps, 1);
        assert!((t.row(0)[1] - dt).abs() < 1e-16);
        assert!((t.row(0)[2] - dt * dt / 3.0).abs() < 1e-17);
    }

    #[test]
    fn cross_term() {
        let dt = 0.1;
        let amps =
            ControlAmplitudes::from_rows(dt, 2, &[vec![1.0, 0.0], vec![0.3, 0.3], vec![0.0, 1.0]])
                .unwrap();
        let t = magnus_coefficients(&amps).unwrap();
        assert!((t.row(0)[5] - dt * dt / 3.0).abs() < 1e-18);
    }

    #[test]
    fn parity_errors() {
        for pts in [1, 2, 6] {
            let amps = ControlAmplitudes::drift_only(pts, 0.1).unwrap();
            let err = magnus_coefficients(&amps).unwrap_err();
            assert_eq!(err.code(), crate::ErrorCode::SamplingParity);
        }
    }

    #[test]
    fn bound_examples() {
        let h0 = Matrix::<f64>::sigma_z().scale_real(0.5);
        let eff0 = build_effective_system(&ControlSystem::drift_only(h0.clone()).unwrap());
        assert_eq!(magnus_spectral_bound(&eff0, 0.1), 0.2 * 0.5);

        let commuting = ControlSystem::new(h0.clone(), vec![Matrix::sigma_z()]).unwrap();
        let eff = build_effective_system(&commuting);
        assert_eq!(magnus_spectral_bound(&eff, 0.1), 0.2 * 1.5);

        let sys = ControlSystem::new(h0, vec![Matrix::sigma_x().scale_real(0.5)]).unwrap();
        let eff = build_effective_system(&sys);
        let got = magnus_spectral_bound(&eff, 0.1);
        assert!((got - (0.2 + 2.0 * 0.01 / 3.0 * 0.5)).abs() < 1e-16, "{got}");
    }
}
