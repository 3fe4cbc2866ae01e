// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;

use crate::linalg::ComplexMatrix;

/// A cached node value: a complex scalar or a complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(C64),
    Matrix(ComplexMatrix),
}

impl Value {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Value::Scalar(_) => (1, 1),
            Value::Matrix(m) => m.shape(),
        }
    }

    pub fn len(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Value::Scalar(_))
    }

    pub fn as_scalar(&self) -> Option<C64> {
        match self {
            Value::Scalar(z) => Some(*z),
            Value::Matrix(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&ComplexMatrix> {
        match self {
            Value::Scalar(_) => None,
            Value::Matrix(m) => Some(m),
        }
    }

    /// Row-major entries.
    pub fn to_vec(&self) -> Vec<C64> {
        match self {
            Value::Scalar(z) => vec![*z],
            Value::Matrix(m) => m.to_row_major(),
        }
    }

    /// Rebuild a value of this shape from row-major entries.
    pub(crate) fn with_entries(&self, data: Vec<C64>) -> Value {
        match self {
            Value::Scalar(_) => Value::Scalar(data[0]),
            Value::Matrix(m) => {
                Value::Matrix(ComplexMatrix::from_row_major(m.rows(), m.cols(), data).expect("same shape"))
            }
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Scalar(C64::new(x, 0.0))
    }
}

impl From<C64> for Value {
    fn from(z: C64) -> Self {
        Value::Scalar(z)
    }
}

impl From<ComplexMatrix> for Value {
    fn from(m: ComplexMatrix) -> Self {
        Value::Matrix(m)
    }
}
