use num_complex::Complex;
use num_traits::Zero;

use super::{Matrix, Precision, Real};
use crate::error::{Error, Result};

/// Contiguous storage for `count` square matrices of edge `dim`, spaced `stride` elements apart.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBatch<T> {
    data: Vec<Complex<T>>,
    dim: usize,
    count: usize,
    stride: usize,
}

fn required_len(dim: usize, count: usize, stride: usize) -> usize {
    if count == 0 {
        0
    } else {
        stride * (count - 1) + dim * dim
    }
}

fn check_layout(len: usize, dim: usize, count: usize, stride: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::shape("matrix dimension must be at least 1"));
    }
    if stride < dim * dim {
        return Err(Error::shape(format!(
            "stride {stride} shorter than a {dim}x{dim} matrix"
        )));
    }
    let need = required_len(dim, count, stride);
    if len < need {
        return Err(Error::shape(format!(
            "batch of {count} {dim}x{dim} matrices at stride {stride} needs {need} elements, storage has {len}"
        )));
    }
    Ok(())
}

impl<T: Real> MatrixBatch<T> {
    /// A zero-filled, densely packed batch.
    pub fn zeros(dim: usize, count: usize) -> Self {
        Self::zeros_strided(dim, count, dim * dim)
    }

    pub fn zeros_strided(dim: usize, count: usize, stride: usize) -> Self {
        assert!(dim >= 1 && stride >= dim * dim, "invalid batch layout");
        MatrixBatch {
            data: vec![Complex::zero(); required_len(dim, count, stride)],
            dim,
            count,
            stride,
        }
    }

    pub fn from_vec(data: Vec<Complex<T>>, dim: usize, count: usize, stride: usize) -> Result<Self> {
        check_layout(data.len(), dim, count, stride)?;
        Ok(MatrixBatch {
            data,
            dim,
            count,
            stride,
        })
    }

    pub fn from_matrices(matrices: &[Matrix<T>]) -> Result<Self> {
        let dim = matrices
            .first()
            .map(Matrix::dim)
            .ok_or_else(|| Error::shape("cannot infer dimension of an empty matrix list"))?;
        let mut data = Vec::with_capacity(dim * dim * matrices.len());
        for (k, m) in matrices.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::shape(format!(
                    "matrix {k} is {0}x{0}, batch is {dim}x{dim}",
                    m.dim()
                )));
            }
            data.extend_from_slice(m.as_slice());
        }
        Ok(MatrixBatch {
            data,
            dim,
            count: matrices.len(),
            stride: dim * dim,
        })
    }

    /// `count` copies of `m`.
    pub fn repeat(m: &Matrix<T>, count: usize) -> Self {
        let mut data = Vec::with_capacity(m.as_slice().len() * count);
        for _ in 0..count {
            data.extend_from_slice(m.as_slice());
        }
        MatrixBatch {
            data,
            dim: m.dim(),
            count,
            stride: m.dim() * m.dim(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    /// Elements of matrix `k`. Panics when `k >= count`.
    pub fn matrix(&self, k: usize) -> &[Complex<T>] {
        assert!(k < self.count, "matrix index {k} out of range ({})", self.count);
        let start = k * self.stride;
        &self.data[start..start + self.dim * self.dim]
    }

    pub fn matrix_mut(&mut self, k: usize) -> &mut [Complex<T>] {
        assert!(k < self.count, "matrix index {k} out of range ({})", self.count);
        let start = k * self.stride;
        let len = self.dim * self.dim;
        &mut self.data[start..start + len]
    }

    pub fn get(&self, k: usize) -> Result<Matrix<T>> {
        if k >= self.count {
            return Err(Error::IndexOutOfRange {
                index: k,
                count: self.count,
            });
        }
        Matrix::from_vec(self.dim, self.matrix(k).to_vec())
    }

    pub fn to_matrices(&self) -> Vec<Matrix<T>> {
        (0..self.count).map(|k| self.get(k).unwrap()).collect()
    }

    pub fn cast<U: Real>(&self) -> MatrixBatch<U> {
        MatrixBatch {
            data: self.data.iter().map(|&z| super::cast_complex(z)).collect(),
            dim: self.dim,
            count: self.count,
            stride: self.stride,
        }
    }

    /// Reshape to `count` densely packed `dim`×`dim` matrices, reusing the allocation.
    /// Contents are unspecified afterwards.
    pub fn reshape(&mut self, dim: usize, count: usize) {
        assert!(dim >= 1);
        self.dim = dim;
        self.count = count;
        self.stride = dim * dim;
        self.data.resize(required_len(dim, count, self.stride), Complex::zero());
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|z| *z = Complex::zero());
    }

    pub fn view(&self) -> BatchRef<'_, T> {
        BatchRef {
            data: &self.data,
            dim: self.dim,
            count: self.count,
            stride: self.stride,
        }
    }

    pub fn view_mut(&mut self) -> BatchMut<'_, T> {
        BatchMut {
            data: &mut self.data,
            dim: self.dim,
            count: self.count,
            stride: self.stride,
        }
    }

    /// A view of `count` matrices starting `offset` elements into the storage,
    /// spaced `stride` elements apart.
    pub fn strided_view(&self, offset: usize, stride: usize, count: usize) -> Result<BatchRef<'_, T>> {
        let tail = self
            .data
            .get(offset..)
            .ok_or_else(|| Error::shape(format!("offset {offset} beyond batch storage")))?;
        BatchRef::new(tail, self.dim, count, stride)
    }

    pub fn strided_view_mut(
        &mut self,
        offset: usize,
        stride: usize,
        count: usize,
    ) -> Result<BatchMut<'_, T>> {
        let dim = self.dim;
        let tail = self
            .data
            .get_mut(offset..)
            .ok_or_else(|| Error::shape(format!("offset {offset} beyond batch storage")))?;
        BatchMut::new(tail, dim, count, stride)
    }
}

/// Borrowed read-only strided batch.
#[derive(Debug, Clone, Copy)]
pub struct BatchRef<'a, T> {
    data: &'a [Complex<T>],
    dim: usize,
    count: usize,
    stride: usize,
}

impl<'a, T: Real> BatchRef<'a, T> {
    pub fn new(data: &'a [Complex<T>], dim: usize, count: usize, stride: usize) -> Result<Self> {
        check_layout(data.len(), dim, count, stride)?;
        Ok(BatchRef {
            data,
            dim,
            count,
            stride,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn matrix(&self, k: usize) -> &'a [Complex<T>] {
        let start = k * self.stride;
        &self.data[start..start + self.dim * self.dim]
    }
}

/// Borrowed mutable strided batch.
#[derive(Debug)]
pub struct BatchMut<'a, T> {
    data: &'a mut [Complex<T>],
    dim: usize,
    count: usize,
    stride: usize,
}

impl<'a, T: Real> BatchMut<'a, T> {
    pub fn new(data: &'a mut [Complex<T>], dim: usize, count: usize, stride: usize) -> Result<Self> {
        check_layout(data.len(), dim, count, stride)?;
        Ok(BatchMut {
            data,
            dim,
            count,
            stride,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn matrix_mut(&mut self, k: usize) -> &mut [Complex<T>] {
        let start = k * self.stride;
        let len = self.dim * self.dim;
        &mut self.data[start..start + len]
    }

    /// Storage covering all `count` matrices, for chunked parallel iteration.
    pub(crate) fn storage_mut(&mut self) -> &mut [Complex<T>] {
        let len = required_len(self.dim, self.count, self.stride);
        &mut self.data[..len]
    }
}
