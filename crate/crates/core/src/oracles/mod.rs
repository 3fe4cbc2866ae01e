// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Density-matrix reference implementations used for validation only.
//!
//! Superoperators act on column-stacked density matrices,
//! `vec(ρ)[i + j d] = ρ[i, j]`, so `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

mod grape;

pub use grape::{
    analytical_nojump_gradient, closed_grape_gradient, nojump_gradient_terms, open_grape_gradient, GradientArray,
    NoJumpTerms,
};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::{ControlPulse, OpenSystem};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Limits for the reference integrators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    /// Systems up to this dimension use dense superoperator exponentials;
    /// larger ones use a sparse Taylor action on vec(ρ).
    pub dense_max_dim: usize,
    /// Hard cap on the Hilbert dimension accepted by the oracle.
    pub max_dim: usize,
    /// Tolerance for the trace/Hermiticity checks made at every step.
    pub invariant_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { dense_max_dim: 8, max_dim: 64, invariant_tol: 1e-8 }
    }
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e-10 and positivity to a
    /// -1e-9 eigenvalue floor.
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(rho, 1e-10)
    }

    fn with_tolerance(rho: ComplexMatrix, tol: f64) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::NonSquare { rows: rho.rows(), cols: rho.cols() });
        }
        let herm = rho.hermiticity_error();
        if herm > tol {
            return Err(Error::CptpViolation(format!("Hermiticity error {herm:.3e}")));
        }
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::CptpViolation(format!("trace {tr}")));
        }
        let min_eig = min_eigenvalue(&rho);
        if min_eig < -1e-9 {
            return Err(Error::CptpViolation(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { rho })
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("state norm² {n} is not 1")));
        }
        Self::new(ComplexMatrix::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj()))
    }

    fn unchecked(rho: ComplexMatrix) -> Self {
        Self { rho }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    /// `Tr(A ρ)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> C64 {
        let mut acc = ZERO;
        for (i, k, v) in a.entries() {
            acc += v * self.rho.get(k, i);
        }
        acc
    }

    pub fn purity(&self) -> f64 {
        self.rho.matmul(&self.rho).expect("square").trace().re
    }

    pub fn to_vec(&self) -> Vec<C64> {
        vectorize(&self.rho)
    }
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of `(m + m†)/2`.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let a = m.to_nalgebra();
    let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
}

pub fn vectorize(m: &ComplexMatrix) -> Vec<C64> {
    let d = m.rows();
    let mut v = vec![ZERO; d * m.cols()];
    for (i, j, z) in m.entries() {
        v[i + j * d] = z;
    }
    v
}

pub fn unvectorize(v: &[C64], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, v.len() / d, |i, j| v[i + j * d])
}

/// Superoperators in the `L = i G` convention, where `dvec(ρ)/dt = G vec(ρ)`
/// and the step propagator is `Λ_j = exp(-i L_j dt)`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    dim: usize,
    l0: ComplexMatrix,
    lk: Vec<ComplexMatrix>,
}

fn commutator_generator(h: &ComplexMatrix, id: &ComplexMatrix) -> Result<ComplexMatrix> {
    // vec(-i[H, ρ]) = -i (I⊗H - Hᵀ⊗I) vec(ρ)
    let hs = h.to_sparse();
    Ok(id.kron(&hs).sub(&hs.transpose().kron(id))?.scale(C64::new(0.0, -1.0)))
}

impl Liouvillian {
    pub fn new(sys: &OpenSystem) -> Result<Self> {
        let d = sys.dim();
        let id = ComplexMatrix::identity(d);
        let mut g0 = commutator_generator(sys.h0(), &id)?;
        for ch in sys.channels() {
            let c = ch.op.to_sparse();
            let cdc = c.adjoint().matmul(&c)?;
            let diss = c
                .conj()
                .kron(&c)
                .add_scaled(&id.kron(&cdc), C64::new(-0.5, 0.0))?
                .add_scaled(&cdc.transpose().kron(&id), C64::new(-0.5, 0.0))?;
            g0 = g0.add_scaled(&diss, C64::new(ch.rate, 0.0))?;
        }
        let i = C64::new(0.0, 1.0);
        let lk =
            sys.controls().iter().map(|h| Ok(commutator_generator(h, &id)?.scale(i))).collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: d, l0: g0.scale(i), lk })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &ComplexMatrix {
        &self.l0
    }

    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.lk
    }

    /// `L_j = L0 + Σ_k u_kj L_k`.
    pub fn at_step(&self, pulse: &ControlPulse, j: usize) -> Result<ComplexMatrix> {
        if pulse.controls() != self.lk.len() {
            return Err(Error::DimensionMismatch("pulse/control count".into()));
        }
        let mut l = self.l0.clone();
        for (k, lk) in self.lk.iter().enumerate() {
            let u = pulse.get(k, j);
            if u != 0.0 {
                l = l.add_scaled(lk, C64::new(u, 0.0))?;
            }
        }
        Ok(l)
    }

    /// `max |vec(I)† L|`; zero for a trace-preserving generator.
    pub fn trace_defect(&self, pulse: &ControlPulse, j: usize) -> Result<f64> {
        let l = self.at_step(pulse, j)?;
        let id = vectorize(&ComplexMatrix::identity(self.dim));
        let mut row = vec![ZERO; l.cols()];
        l.apply_adjoint_add(&id, &mut row);
        Ok(row.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

/// Step propagator `exp(G dt)` for one piecewise-constant interval.
enum StepMap {
    Dense(DMatrix<C64>),
    Action { g: ComplexMatrix, substeps: usize },
}

impl StepMap {
    fn new(l: &ComplexMatrix, dt: f64, dense: bool) -> Self {
        let g = l.scale(C64::new(0.0, -dt));
        if dense {
            StepMap::Dense(g.to_nalgebra().exp())
        } else {
            let substeps = (g.norm_one().ceil() as usize).max(1);
            StepMap::Action { g: g.scale(C64::new(1.0 / substeps as f64, 0.0)), substeps }
        }
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        match self {
            StepMap::Dense(m) => (m * nalgebra::DVector::from_column_slice(v)).iter().copied().collect(),
            StepMap::Action { g, substeps } => {
                let mut x = v.to_vec();
                for _ in 0..*substeps {
                    x = taylor_action(|src, dst| g.apply(src, dst), &x);
                }
                x
            }
        }
    }

    fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        match self {
            StepMap::Dense(m) => (m.adjoint() * nalgebra::DVector::from_column_slice(v)).iter().copied().collect(),
            StepMap::Action { g, substeps } => {
                let mut x = v.to_vec();
                for _ in 0..*substeps {
                    x = taylor_action(
                        |src, dst| {
                            dst.iter_mut().for_each(|z| *z = ZERO);
                            g.apply_adjoint_add(src, dst)
                        },
                        &x,
                    );
                }
                x
            }
        }
    }
}

/// Fixed-order Taylor series for `exp(G) x` with `‖G‖₁ ≤ 1`: 30 terms put
/// the truncation error below 1e-32.
fn taylor_action(apply: impl Fn(&[C64], &mut [C64]), x: &[C64]) -> Vec<C64> {
    let mut sum = x.to_vec();
    let mut term = x.to_vec();
    let mut next = vec![ZERO; x.len()];
    for k in 1..=30 {
        apply(&term, &mut next);
        let inv = 1.0 / k as f64;
        for (t, n) in term.iter_mut().zip(&next) {
            *t = n * inv;
        }
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    sum
}

fn check_dims(sys: &OpenSystem, d: usize, opts: &OracleOptions) -> Result<()> {
    if sys.dim() != d {
        return Err(Error::DimensionMismatch(format!("state dimension {d} vs system {}", sys.dim())));
    }
    if d > opts.max_dim {
        return Err(Error::InvalidParameter(format!("oracle capped at d = {}, got {d}", opts.max_dim)));
    }
    Ok(())
}

fn step_maps(sys: &OpenSystem, pulse: &ControlPulse, opts: &OracleOptions) -> Result<Vec<StepMap>> {
    let liou = Liouvillian::new(sys)?;
    let dense = sys.dim() <= opts.dense_max_dim;
    (0..pulse.steps()).map(|j| Ok(StepMap::new(&liou.at_step(pulse, j)?, pulse.dt(), dense))).collect()
}

/// `ρ_0, ρ_1, …, ρ_N` under the Lindblad equation with piecewise-constant
/// controls.
pub fn lindblad_propagate(sys: &OpenSystem, pulse: &ControlPulse, rho0: &DensityMatrix) -> Result<Vec<DensityMatrix>> {
    lindblad_propagate_with(sys, pulse, rho0, &OracleOptions::default())
}

pub fn lindblad_propagate_with(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    rho0: &DensityMatrix,
    opts: &OracleOptions,
) -> Result<Vec<DensityMatrix>> {
    let d = rho0.dim();
    check_dims(sys, d, opts)?;
    let maps = step_maps(sys, pulse, opts)?;
    let mut out = Vec::with_capacity(pulse.steps() + 1);
    out.push(rho0.clone());
    let mut v = rho0.to_vec();
    for (j, map) in maps.iter().enumerate() {
        v = map.apply(&v);
        let rho = unvectorize(&v, d);
        let tr = rho.trace();
        let herm = rho.hermiticity_error();
        if (tr - C64::new(1.0, 0.0)).norm() > opts.invariant_tol || herm > opts.invariant_tol {
            return Err(Error::CptpViolation(format!("step {j}: trace {tr}, Hermiticity error {herm:.3e}")));
        }
        out.push(DensityMatrix::unchecked(rho));
    }
    Ok(out)
}

/// Steady state of the time-independent generator with constant controls
/// `u`, from a dense linear solve with the trace constraint replacing one
/// equation.
pub fn steady_state(sys: &OpenSystem, u: &[f64]) -> Result<DensityMatrix> {
    let liou = Liouvillian::new(sys)?;
    let pulse = ControlPulse::new(1.0, u.iter().map(|&x| vec![x]).collect())?;
    let l = liou.at_step(&pulse, 0)?.to_nalgebra();
    let d = sys.dim();
    let n = d * d;
    let mut a = l;
    let mut b = nalgebra::DVector::from_element(n, ZERO);
    for j in 0..n {
        a[(0, j)] = ZERO;
    }
    for k in 0..d {
        a[(0, k + k * d)] = C64::new(1.0, 0.0);
    }
    b[0] = C64::new(1.0, 0.0);
    let x = a.lu().solve(&b).ok_or_else(|| Error::SingularOp("steady-state system is singular".into()))?;
    let rho = unvectorize(x.as_slice(), d);
    // Symmetrize away roundoff before validation.
    let rho = rho.add(&rho.adjoint())?.scale(C64::new(0.5, 0.0));
    DensityMatrix::with_tolerance(rho, 1e-8)
}
