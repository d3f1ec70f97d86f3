//! Batch kernels and the CPU reference backend.
//!
//! Kernels split work across the batch index only. Each output element is
//! accumulated sequentially in a fixed order, so results do not depend on the
//! number of worker threads.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use super::{BatchMut, BatchRef, Matrix, MatrixBatch, Precision, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capabilities {
    pub name: &'static str,
    pub max_batch: usize,
    pub precisions: Vec<Precision>,
    pub threads: usize,
}

/// Batched BLAS-style operations over [`MatrixBatch`] storage.
pub trait BatchBackend: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    /// `C[k] = alpha · A[k] · B[k] + beta · C[k]` for every `k`.
    ///
    /// `A` and `B` may be views into the same storage. When `beta` is zero, `C`
    /// is overwritten without being read.
    fn gemm_strided_batched<T: Real>(
        &self,
        alpha: Complex<T>,
        a: BatchRef<'_, T>,
        b: BatchRef<'_, T>,
        beta: Complex<T>,
        c: BatchMut<'_, T>,
    ) -> Result<()>;

    /// `C[k] += a · I` for every `k`.
    fn diagonal_add_batched<T: Real>(&self, c: BatchMut<'_, T>, a: Complex<T>) -> Result<()>;

    /// `out[k] = scale · Σᵢ coeffs[k][i] · h[i]`, with `coeffs` a row-major
    /// `pts × h.len()` table. This is one real-by-complex GEMM of the coefficient
    /// table against the matrices flattened to rows of length `d²`.
    fn expand_linear_combination<T: Real>(
        &self,
        h: &[Matrix<T>],
        coeffs: &[T],
        scale: T,
    ) -> Result<MatrixBatch<T>>;

    /// Number of `gemm_strided_batched` calls issued so far.
    fn gemm_calls(&self) -> u64;
}

/// Multi-threaded CPU backend. Uses the global rayon pool unless a thread count is given.
#[derive(Debug, Default)]
pub struct CpuBackend {
    pool: Option<Arc<rayon::ThreadPool>>,
    gemm_calls: AtomicU64,
}

impl CpuBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_threads(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(CpuBackend {
            pool: Some(Arc::new(pool)),
            gemm_calls: AtomicU64::new(0),
        })
    }

    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

impl Clone for CpuBackend {
    fn clone(&self) -> Self {
        CpuBackend {
            pool: self.pool.clone(),
            gemm_calls: AtomicU64::new(0),
        }
    }
}

impl BatchBackend for CpuBackend {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            name: "cpu",
            max_batch: usize::MAX,
            precisions: vec![Precision::Fp32, Precision::Fp64],
            threads: self
                .pool
                .as_ref()
                .map_or_else(rayon::current_num_threads, |p| p.current_num_threads()),
        }
    }

    fn gemm_strided_batched<T: Real>(
        &self,
        alpha: Complex<T>,
        a: BatchRef<'_, T>,
        b: BatchRef<'_, T>,
        beta: Complex<T>,
        mut c: BatchMut<'_, T>,
    ) -> Result<()> {
        let (d, n) = (c.dim(), c.count());
        if a.dim() != d || b.dim() != d {
            return Err(Error::shape(format!(
                "gemm operands are {}x{}, {}x{} and {d}x{d}",
                a.dim(),
                a.dim(),
                b.dim(),
                b.dim()
            )));
        }
        if a.count() != n || b.count() != n {
            return Err(Error::shape(format!(
                "gemm batch counts differ: {} / {} / {n}",
                a.count(),
                b.count()
            )));
        }
        self.gemm_calls.fetch_add(1, Ordering::Relaxed);
        if n == 0 {
            return Ok(());
        }
        let stride = c.stride();
        let storage = c.storage_mut();
        self.run(|| {
            storage
                .par_chunks_mut(stride)
                .take(n)
                .enumerate()
                .for_each_init(
                    || vec![Complex::<T>::zero(); d],
                    |acc, (k, cm)| {
                        gemm_kernel(d, alpha, a.matrix(k), b.matrix(k), beta, &mut cm[..d * d], acc)
                    },
                );
        });
        Ok(())
    }

    fn diagonal_add_batched<T: Real>(&self, mut c: BatchMut<'_, T>, a: Complex<T>) -> Result<()> {
        let (d, n, stride) = (c.dim(), c.count(), c.stride());
        if n == 0 {
            return Ok(());
        }
        let storage = c.storage_mut();
        self.run(|| {
            storage.par_chunks_mut(stride).take(n).for_each(|cm| {
                for i in 0..d {
                    cm[i * d + i] = cm[i * d + i] + a;
                }
            });
        });
        Ok(())
    }

    fn expand_linear_combination<T: Real>(
        &self,
        h: &[Matrix<T>],
        coeffs: &[T],
        scale: T,
    ) -> Result<MatrixBatch<T>> {
        let terms = h.len();
        let d = h
            .first()
            .map(Matrix::dim)
            .ok_or_else(|| Error::shape("expansion needs at least the drift matrix"))?;
        if let Some(bad) = h.iter().position(|m| m.dim() != d) {
            return Err(Error::shape(format!(
                "term {bad} is {0}x{0}, drift is {d}x{d}",
                h[bad].dim()
            )));
        }
        if coeffs.len() % terms != 0 {
            return Err(Error::shape(format!(
                "coefficient table of {} entries does not split into rows of {terms}",
                coeffs.len()
            )));
        }
        let pts = coeffs.len() / terms;
        let mut out = MatrixBatch::zeros(d, pts);
        if pts == 0 {
            return Ok(out);
        }
        let dd = d * d;
        self.run(|| {
            out.as_mut_slice()
                .par_chunks_mut(dd)
                .zip(coeffs.par_chunks(terms))
                .for_each(|(dst, row)| {
                    for (e, z) in dst.iter_mut().enumerate() {
                        let mut acc = Complex::<T>::zero();
                        for (hi, &ci) in h.iter().zip(row) {
                            acc = acc + hi.as_slice()[e] * ci;
                        }
                        *z = acc * scale;
                    }
                });
        });
        Ok(out)
    }

    fn gemm_calls(&self) -> u64 {
        self.gemm_calls.load(Ordering::Relaxed)
    }
}

/// Single-matrix `C = alpha·A·B + beta·C`, row-major; `acc` is a row scratch of length `d`.
#[inline]
fn gemm_kernel<T: Real>(
    d: usize,
    alpha: Complex<T>,
    a: &[Complex<T>],
    b: &[Complex<T>],
    beta: Complex<T>,
    c: &mut [Complex<T>],
    acc: &mut [Complex<T>],
) {
    let beta_zero = beta.is_zero();
    for i in 0..d {
        acc.iter_mut().for_each(|z| *z = Complex::zero());
        let arow = &a[i * d..(i + 1) * d];
        for (l, &ail) in arow.iter().enumerate() {
            let brow = &b[l * d..(l + 1) * d];
            for (z, &blj) in acc.iter_mut().zip(brow) {
                *z = *z + ail * blj;
            }
        }
        let crow = &mut c[i * d..(i + 1) * d];
        if beta_zero {
            for (cij, &s) in crow.iter_mut().zip(acc.iter()) {
                *cij = alpha * s;
            }
        } else {
            for (cij, &s) in crow.iter_mut().zip(acc.iter()) {
                *cij = alpha * s + beta * *cij;
            }
        }
    }
}

/// Copy matrix `src_index` of `src` into slot `dst_index` of `dst`.
pub fn copy_matrix<T: Real>(
    src: BatchRef<'_, T>,
    src_index: usize,
    dst: &mut BatchMut<'_, T>,
    dst_index: usize,
) -> Result<()> {
    if src.dim() != dst.dim() {
        return Err(Error::shape(format!(
            "copy from {0}x{0} into {1}x{1}",
            src.dim(),
            dst.dim()
        )));
    }
    if src_index >= src.count() {
        return Err(Error::IndexOutOfRange {
            index: src_index,
            count: src.count(),
        });
    }
    if dst_index >= dst.count() {
        return Err(Error::IndexOutOfRange {
            index: dst_index,
            count: dst.count(),
        });
    }
    dst.matrix_mut(dst_index)
        .copy_from_slice(src.matrix(src_index));
    Ok(())
}
