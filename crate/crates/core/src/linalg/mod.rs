//! Batched dense complex linear algebra.
//!
//! Every matrix is stored row-major with interleaved `(re, im)` pairs
//! (`num_complex::Complex<T>` is `#[repr(C)]`). A [`MatrixBatch`] packs `count`
//! matrices of edge `dim` at a fixed element `stride`; kernels in [`backend`]
//! operate on borrowed strided views of such batches.

pub mod backend;
mod batch;
mod matrix;

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::Float;

use crate::error::Error;

pub use backend::{copy_matrix, BatchBackend, Capabilities, CpuBackend};
pub use batch::{BatchMut, BatchRef, MatrixBatch};
pub use matrix::{one_norm, Matrix};

pub use num_complex::Complex;

/// Floating-point working precision of a batch or a propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Fp32,
    Fp64,
}

impl Precision {
    /// Target truncation error for the exponential series: 2⁻²⁴ (FP32) or 2⁻⁵³ (FP64).
    pub fn unit_roundoff(self) -> f64 {
        match self {
            Precision::Fp32 => 2f64.powi(-24),
            Precision::Fp64 => 2f64.powi(-53),
        }
    }

    /// Distance from 1.0 to the next representable value.
    pub fn machine_epsilon(self) -> f64 {
        match self {
            Precision::Fp32 => f32::EPSILON as f64,
            Precision::Fp64 => f64::EPSILON,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Fp32 => "fp32",
            Precision::Fp64 => "fp64",
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fp32" | "f32" | "single" => Ok(Precision::Fp32),
            "fp64" | "f64" | "double" => Ok(Precision::Fp64),
            other => Err(Error::Config(format!(
                "unknown precision `{other}` (expected fp32 or fp64)"
            ))),
        }
    }
}

/// Real scalar type a batch can be instantiated with.
pub trait Real: Float + Default + Send + Sync + Debug + Display + 'static {
    const PRECISION: Precision;

    /// Round an `f64` to this precision.
    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Fp32;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Fp64;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[inline]
pub(crate) fn cast_complex<T: Real, U: Real>(z: Complex<T>) -> Complex<U> {
    Complex::new(U::of(z.re.as_f64()), U::of(z.im.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_tokens() {
        assert_eq!("fp32".parse::<Precision>().unwrap(), Precision::Fp32);
        assert_eq!("FP64".parse::<Precision>().unwrap(), Precision::Fp64);
        let err = "fp16".parse::<Precision>().unwrap_err();
        assert_eq!(err.code(), crate::ErrorCode::Config);
    }

    #[test]
    fn roundoff_targets() {
        assert_eq!(Precision::Fp32.unit_roundoff(), 5.960464477539063e-8);
        assert_eq!(Precision::Fp64.unit_roundoff(), 1.1102230246251565e-16);
    }
}
