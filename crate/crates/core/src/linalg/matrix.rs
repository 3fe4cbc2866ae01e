// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Row-major entries.
    Dense(Vec<C64>),
    Sparse(Csr),
}

#[derive(Clone, Debug, PartialEq)]
struct Csr {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

/// Complex matrix with either dense row-major or CSR storage.
///
/// Sparse values never hold explicit zeros, so `to_sparse().to_dense()` is
/// an exact round trip.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

fn check_finite(values: &[C64], what: &'static str) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, storage: Storage::Dense(vec![ZERO; rows * cols]) }
    }

    /// An empty sparse matrix.
    pub fn sparse_zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            storage: Storage::Sparse(Csr { row_ptr: vec![0; rows + 1], col_idx: Vec::new(), values: Vec::new() }),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    /// Sparse diagonal matrix.
    pub fn diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let trip: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(n, n, &trip).expect("diagonal entries in range")
    }

    pub fn scalar(z: C64) -> Self {
        Self { rows: 1, cols: 1, storage: Storage::Dense(vec![z]) }
    }

    /// Dense d×1 column.
    pub fn column(v: &[C64]) -> Self {
        Self { rows: v.len(), cols: 1, storage: Storage::Dense(v.to_vec()) }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        check_finite(&data, "matrix entries")?;
        Ok(Self { rows, cols, storage: Storage::Dense(data) })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, storage: Storage::Dense(data) }
    }

    /// Sparse matrix from (row, col, value) triplets. Duplicates are summed and
    /// entries that end up exactly zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, C64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= rows {
                return Err(Error::IndexOutOfRange { index: i, len: rows });
            }
            if j >= cols {
                return Err(Error::IndexOutOfRange { index: j, len: cols });
            }
            sorted.push((i, j, v));
        }
        check_finite(&sorted.iter().map(|t| t.2).collect::<Vec<_>>(), "matrix entries")?;
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(sorted.len());
        for (i, j, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(merged.len());
        let mut values = Vec::with_capacity(merged.len());
        for (i, j, v) in merged {
            if v != ZERO {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { rows, cols, storage: Storage::Sparse(Csr { row_ptr, col_idx, values }) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Stored entries (all entries for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.len(),
            Storage::Sparse(s) => s.values.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of range");
        match &self.storage {
            Storage::Dense(d) => d[i * self.cols + j],
            Storage::Sparse(s) => {
                let range = s.row_ptr[i]..s.row_ptr[i + 1];
                match s.col_idx[range.clone()].binary_search(&j) {
                    Ok(k) => s.values[range.start + k],
                    Err(_) => ZERO,
                }
            }
        }
    }

    /// Iterate over stored entries as (row, col, value).
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, usize, C64)> + '_> {
        match &self.storage {
            Storage::Dense(d) => {
                let cols = self.cols;
                Box::new(d.iter().enumerate().map(move |(k, &v)| (k / cols, k % cols, v)))
            }
            Storage::Sparse(s) => Box::new(
                (0..self.rows)
                    .flat_map(move |i| (s.row_ptr[i]..s.row_ptr[i + 1]).map(move |k| (i, s.col_idx[k], s.values[k]))),
            ),
        }
    }

    /// Row-major dense copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Sparse(_) => {
                let mut out = vec![ZERO; self.rows * self.cols];
                for (i, j, v) in self.entries() {
                    out[i * self.cols + j] = v;
                }
                out
            }
        }
    }

    /// Borrow the dense entries, if stored densely.
    pub fn dense_data(&self) -> Option<&[C64]> {
        match &self.storage {
            Storage::Dense(d) => Some(d),
            Storage::Sparse(_) => None,
        }
    }

    pub fn to_dense(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, storage: Storage::Dense(self.to_row_major()) }
    }

    pub fn to_sparse(&self) -> Self {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense(_) => {
                let trip: Vec<_> = self.entries().filter(|t| t.2 != ZERO).collect();
                Self::from_triplets(self.rows, self.cols, &trip).expect("entries in range")
            }
        }
    }

    fn map_values(&self, f: impl Fn(C64) -> C64) -> Self {
        let storage = match &self.storage {
            Storage::Dense(d) => Storage::Dense(d.iter().map(|&z| f(z)).collect()),
            Storage::Sparse(s) => {
                // f may map a nonzero to zero (scale by 0); rebuild in that case.
                let values: Vec<C64> = s.values.iter().map(|&z| f(z)).collect();
                if values.contains(&ZERO) {
                    let trip: Vec<_> = self.entries().zip(values).map(|((i, j, _), v)| (i, j, v)).collect();
                    return Self::from_triplets(self.rows, self.cols, &trip).expect("in range");
                }
                Storage::Sparse(Csr { row_ptr: s.row_ptr.clone(), col_idx: s.col_idx.clone(), values })
            }
        };
        Self { rows: self.rows, cols: self.cols, storage }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map_values(|z| z * c)
    }

    pub fn conj(&self) -> Self {
        self.map_values(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        match &self.storage {
            Storage::Dense(d) => {
                let mut out = vec![ZERO; d.len()];
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        out[j * self.rows + i] = d[i * self.cols + j];
                    }
                }
                Self { rows: self.cols, cols: self.rows, storage: Storage::Dense(out) }
            }
            Storage::Sparse(_) => {
                let trip: Vec<_> = self.entries().map(|(i, j, v)| (j, i, v)).collect();
                Self::from_triplets(self.cols, self.rows, &trip).expect("in range")
            }
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    fn same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch { op, detail: format!("{:?} vs {:?}", self.shape(), other.shape()) });
        }
        Ok(())
    }

    /// `self + c * other`. Sparse when both operands are sparse.
    pub fn add_scaled(&self, other: &Self, c: C64) -> Result<Self> {
        self.same_shape(other, "add")?;
        if self.is_sparse() && other.is_sparse() {
            let mut trip: Vec<_> = self.entries().collect();
            trip.extend(other.entries().map(|(i, j, v)| (i, j, v * c)));
            return Self::from_triplets(self.rows, self.cols, &trip);
        }
        let mut out = self.to_row_major();
        for (i, j, v) in other.entries() {
            out[i * self.cols + j] += v * c;
        }
        Ok(Self { rows: self.rows, cols: self.cols, storage: Storage::Dense(out) })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, C64::new(-1.0, 0.0))
    }

    /// Matrix product. Sparse only when both factors are sparse.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                detail: format!("{:?} x {:?}", self.shape(), other.shape()),
            });
        }
        let (m, n) = (self.rows, other.cols);
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => {
                let mut trip = Vec::new();
                let mut acc = vec![ZERO; n];
                let mut touched = Vec::new();
                for i in 0..m {
                    for ka in a.row_ptr[i]..a.row_ptr[i + 1] {
                        let (k, av) = (a.col_idx[ka], a.values[ka]);
                        for kb in b.row_ptr[k]..b.row_ptr[k + 1] {
                            let j = b.col_idx[kb];
                            if acc[j] == ZERO {
                                touched.push(j);
                            }
                            acc[j] += av * b.values[kb];
                        }
                    }
                    for &j in &touched {
                        trip.push((i, j, acc[j]));
                        acc[j] = ZERO;
                    }
                    touched.clear();
                }
                Self::from_triplets(m, n, &trip)
            }
            (Storage::Sparse(a), Storage::Dense(b)) => {
                let mut out = vec![ZERO; m * n];
                for i in 0..m {
                    let row = &mut out[i * n..(i + 1) * n];
                    for ka in a.row_ptr[i]..a.row_ptr[i + 1] {
                        let (k, av) = (a.col_idx[ka], a.values[ka]);
                        for (o, &bv) in row.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                            *o += av * bv;
                        }
                    }
                }
                Ok(Self { rows: m, cols: n, storage: Storage::Dense(out) })
            }
            (Storage::Dense(a), _) => {
                let kdim = self.cols;
                let mut out = vec![ZERO; m * n];
                match &other.storage {
                    Storage::Dense(b) => {
                        for i in 0..m {
                            let row = &mut out[i * n..(i + 1) * n];
                            for k in 0..kdim {
                                let av = a[i * kdim + k];
                                if av == ZERO {
                                    continue;
                                }
                                for (o, &bv) in row.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                                    *o += av * bv;
                                }
                            }
                        }
                    }
                    Storage::Sparse(b) => {
                        for i in 0..m {
                            for k in 0..kdim {
                                let av = a[i * kdim + k];
                                if av == ZERO {
                                    continue;
                                }
                                for kb in b.row_ptr[k]..b.row_ptr[k + 1] {
                                    out[i * n + b.col_idx[kb]] += av * b.values[kb];
                                }
                            }
                        }
                    }
                }
                Ok(Self { rows: m, cols: n, storage: Storage::Dense(out) })
            }
        }
    }

    /// `y = self · x` for a single column, overwriting `y`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        match &self.storage {
            Storage::Dense(a) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let row = &a[i * self.cols..(i + 1) * self.cols];
                    *yi = row.iter().zip(x).fold(ZERO, |acc, (&r, &v)| acc + r * v);
                }
            }
            Storage::Sparse(s) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                        acc += s.values[k] * x[s.col_idx[k]];
                    }
                    *yi = acc;
                }
            }
        }
    }

    /// `y += self† · x` for a single column without forming the adjoint.
    pub fn apply_adjoint_add(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        match &self.storage {
            Storage::Dense(a) => {
                for (i, &xi) in x.iter().enumerate() {
                    if xi == ZERO {
                        continue;
                    }
                    let row = &a[i * self.cols..(i + 1) * self.cols];
                    for (yj, &r) in y.iter_mut().zip(row) {
                        *yj += r.conj() * xi;
                    }
                }
            }
            Storage::Sparse(s) => {
                for (i, &xi) in x.iter().enumerate() {
                    for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                        y[s.col_idx[k]] += s.values[k].conj() * xi;
                    }
                }
            }
        }
    }

    /// Kronecker product. Sparse when both factors are sparse.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        if self.is_sparse() && other.is_sparse() {
            let mut trip = Vec::with_capacity(self.nnz() * other.nnz());
            for (i, j, a) in self.entries() {
                for (k, l, b) in other.entries() {
                    trip.push((i * other.rows + k, j * other.cols + l, a * b));
                }
            }
            return Self::from_triplets(r, c, &trip).expect("in range");
        }
        let mut out = vec![ZERO; r * c];
        for (i, j, a) in self.entries() {
            for (k, l, b) in other.entries() {
                out[(i * other.rows + k) * c + j * other.cols + l] = a * b;
            }
        }
        Self { rows: r, cols: c, storage: Storage::Dense(out) }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.rows];
        for (i, _, v) in self.entries() {
            sums[i] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for (_, j, v) in self.entries() {
            sums[j] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|t| t.2.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum entrywise |self - other|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape());
        let a = self.to_row_major();
        let b = other.to_row_major();
        a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// Maximum entrywise |self - self†|.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `[a, b] = ab - ba`.
    pub fn commutator(a: &Self, b: &Self) -> Result<Self> {
        a.matmul(b)?.sub(&b.matmul(a)?)
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.to_row_major())
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sparse_drops_explicit_zeros() {
        let m = ComplexMatrix::from_triplets(2, 2, &[(0, 0, c(1.0, 0.0)), (0, 0, c(-1.0, 0.0)), (1, 0, c(2.0, 0.0))])
            .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), c(2.0, 0.0));
        assert_eq!(m.scale(ZERO).nnz(), 0);
    }

    #[test]
    fn dense_sparse_round_trip() {
        let d = ComplexMatrix::from_fn(3, 4, |i, j| if (i + j) % 2 == 0 { c(i as f64, j as f64 + 0.5) } else { ZERO });
        let s = d.to_sparse();
        assert!(s.is_sparse());
        assert_eq!(s.to_dense(), d);
        assert_eq!(s.to_dense().to_sparse(), s);
    }

    #[test]
    fn mixed_storage_products_agree() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64, (i as f64) - (j as f64)));
        let b = ComplexMatrix::from_triplets(3, 2, &[(0, 1, c(1.0, 1.0)), (2, 0, c(0.0, -2.0))]).unwrap();
        let dd = a.matmul(&b.to_dense()).unwrap();
        assert_eq!(a.matmul(&b).unwrap(), dd);
        assert_eq!(a.to_sparse().matmul(&b).unwrap().to_dense(), dd);
        assert_eq!(a.to_sparse().matmul(&b.to_dense()).unwrap(), dd);
    }

    #[test]
    fn adjoint_apply_matches_explicit_adjoint() {
        let a = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let x = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)];
        let mut y = [ZERO; 2];
        a.apply_adjoint_add(&x, &mut y);
        let mut z = [ZERO; 2];
        a.adjoint().apply(&x, &mut z);
        assert_eq!(y, z);
        let mut w = [ZERO; 2];
        a.to_sparse().apply_adjoint_add(&x, &mut w);
        assert_eq!(w, z);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ComplexMatrix::from_row_major(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn kron_dims_and_values() {
        let x = ComplexMatrix::from_triplets(2, 2, &[(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]).unwrap();
        let i2 = ComplexMatrix::identity(2);
        let k = x.kron(&i2);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k.get(0, 2), c(1.0, 0.0));
        assert_eq!(k.get(3, 1), c(1.0, 0.0));
        assert_eq!(k.nnz(), 4);
        assert_eq!(x.to_dense().kron(&i2).to_sparse(), k);
    }
}
