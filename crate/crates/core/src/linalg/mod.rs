// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Complex matrices, state batches and the Taylor exponential action.

mod batch;
mod expm;
mod matrix;

pub use batch::{inner, norm2, spmv, StateBatch};
pub use expm::{matvec_exp, matvec_exp_with, TaylorOptions};
pub use matrix::ComplexMatrix;

pub use num_complex::Complex64 as C64;

/// Shorthand for a real-valued complex number.
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Shorthand for `i * x`.
pub fn im(x: f64) -> C64 {
    C64::new(0.0, x)
}
