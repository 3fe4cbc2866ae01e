// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Standard sparse operators on truncated Fock spaces.

use num_complex::Complex64 as C64;

use crate::linalg::ComplexMatrix;

/// Lowering operator `a` on `n` levels.
pub fn destroy(n: usize) -> ComplexMatrix {
    let trip: Vec<_> = (1..n).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))).collect();
    ComplexMatrix::from_triplets(n, n, &trip).expect("in range")
}

/// `a†a` on `n` levels.
pub fn number(n: usize) -> ComplexMatrix {
    ComplexMatrix::diagonal(&(0..n).map(|k| C64::new(k as f64, 0.0)).collect::<Vec<_>>())
}

/// `|i⟩⟨j|` in dimension `d`.
pub fn transition(d: usize, i: usize, j: usize) -> ComplexMatrix {
    ComplexMatrix::from_triplets(d, d, &[(i, j, C64::new(1.0, 0.0))]).expect("in range")
}

/// `|k⟩⟨k|` in dimension `d`.
pub fn projector(d: usize, k: usize) -> ComplexMatrix {
    transition(d, k, k)
}

/// Basis vector `|k⟩`.
pub fn basis(d: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[k] = C64::new(1.0, 0.0);
    v
}

/// `a + a†`.
pub fn quadrature_x(a: &ComplexMatrix) -> ComplexMatrix {
    a.add(&a.adjoint()).expect("square")
}

/// `i(a† - a)`.
pub fn quadrature_p(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint().sub(a).expect("square").scale(C64::new(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_algebra() {
        let a = destroy(5);
        let n = a.adjoint().matmul(&a).unwrap();
        assert!(n.max_abs_diff(&number(5)) < 1e-14);
        assert!(quadrature_x(&a).is_hermitian(0.0));
        assert!(quadrature_p(&a).is_hermitian(1e-15));
    }
}
