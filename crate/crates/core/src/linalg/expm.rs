// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::batch::norm2_unchecked;
use crate::linalg::{ComplexMatrix, StateBatch};

/// Truncation controls for the Taylor matrix-exponential action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorOptions {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_terms: 64 }
    }
}

/// `exp(A) V` by the recurrence `T_0 = V, T_k = A T_{k-1} / k`.
///
/// Each column stops accumulating once its own increment satisfies
/// `‖T_k‖ ≤ tol ‖Σ T‖`. Because the rule is per column, a width-m batch
/// produces bit-for-bit the same columns as m width-1 calls.
pub fn matvec_exp(a: &ComplexMatrix, v: &StateBatch, tol: f64, max_terms: usize) -> Result<StateBatch> {
    if !a.is_square() {
        return Err(Error::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    if a.cols() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} generator applied to dimension-{} batch",
            a.rows(),
            a.cols(),
            v.dim()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("taylor tolerance must be positive, got {tol}")));
    }
    if max_terms == 0 {
        return Err(Error::InvalidParameter("max_terms must be at least 1".into()));
    }
    let mut out = v.clone();
    let mut term = vec![C64::new(0.0, 0.0); v.dim()];
    let mut next = term.clone();
    for c in 0..v.width() {
        term.copy_from_slice(v.column(c));
        let sum = out.column_mut(c);
        let mut converged = false;
        for k in 1..=max_terms {
            a.apply(&term, &mut next);
            let inv_k = 1.0 / k as f64;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * inv_k;
            }
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
            if norm2_unchecked(&term) <= tol * tol * norm2_unchecked(sum) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::TaylorDivergence { max_terms });
        }
    }
    Ok(out)
}

/// [`matvec_exp`] with an options struct.
pub fn matvec_exp_with(a: &ComplexMatrix, v: &StateBatch, opts: TaylorOptions) -> Result<StateBatch> {
    matvec_exp(a, v, opts.tol, opts.max_terms)
}
