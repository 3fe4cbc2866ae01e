// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// A d×m block of state vectors stored column-major, so each column is a
/// contiguous slice.
#[derive(Clone, Debug, PartialEq)]
pub struct StateBatch {
    dim: usize,
    width: usize,
    data: Vec<C64>,
}

impl StateBatch {
    pub fn zeros(dim: usize, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::Empty("state batch"));
        }
        Ok(Self { dim, width, data: vec![C64::new(0.0, 0.0); dim * width] })
    }

    /// Width-1 batch holding `v`.
    pub fn from_vector(v: &[C64]) -> Self {
        Self { dim: v.len(), width: 1, data: v.to_vec() }
    }

    pub fn from_columns<V: AsRef<[C64]>>(columns: &[V]) -> Result<Self> {
        let first = columns.first().ok_or(Error::Empty("state batch"))?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(dim * columns.len());
        for col in columns {
            let col = col.as_ref();
            if col.len() != dim {
                return Err(Error::DimensionMismatch(format!("batch column of length {} (expected {dim})", col.len())));
            }
            data.extend_from_slice(col);
        }
        Ok(Self { dim, width: columns.len(), data })
    }

    /// Basis vector |k⟩ in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, len: dim });
        }
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[k] = C64::new(1.0, 0.0);
        Ok(Self::from_vector(&v))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn column(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.width)
    }

    /// Squared norm of every column.
    pub fn norms2(&self) -> Vec<f64> {
        self.columns().map(norm2_unchecked).collect()
    }

    /// Returns a copy with every nonzero column scaled to unit norm.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.width {
            let col = out.column_mut(i);
            let n = norm2_unchecked(col).sqrt();
            if n > 0.0 {
                col.iter_mut().for_each(|z| *z /= n);
            }
        }
        out
    }

    /// Dense d×m matrix view of the batch.
    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim, self.width, |i, j| self.data[j * self.dim + i])
    }

    pub fn into_columns(self) -> Vec<Vec<C64>> {
        self.columns().map(|c| c.to_vec()).collect()
    }
}

pub(crate) fn norm2_unchecked(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// ⟨u|v⟩, conjugate-linear in `u`.
pub fn inner(u: &[C64], v: &[C64]) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!("inner product of {} and {}", u.len(), v.len())));
    }
    Ok(u.iter().zip(v).map(|(a, b)| a.conj() * b).sum())
}

/// ⟨v|v⟩.
pub fn norm2(v: &[C64]) -> f64 {
    norm2_unchecked(v)
}

/// Exact product `A · V`, one column at a time.
pub fn spmv(a: &ComplexMatrix, v: &StateBatch) -> Result<StateBatch> {
    if a.cols() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator applied to dimension-{} batch",
            a.rows(),
            a.cols(),
            v.dim()
        )));
    }
    let mut out = StateBatch::zeros(a.rows(), v.width())?;
    for i in 0..v.width() {
        a.apply(v.column(i), out.column_mut(i));
    }
    Ok(out)
}
