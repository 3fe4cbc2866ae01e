// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Analytical first-order gradients for state-transfer infidelities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::{check_dims, step_maps, DensityMatrix, OracleOptions};
use crate::error::{Error, Result};
use crate::linalg::{inner, ComplexMatrix};
use crate::model::{effective_hamiltonian, ControlPulse, OpenSystem};

/// `grad[k][j] = ∂C/∂u_kj`.
pub type GradientArray = Vec<Vec<f64>>;

fn zeros_like(pulse: &ControlPulse) -> GradientArray {
    vec![vec![0.0; pulse.steps()]; pulse.controls()]
}

/// Open-system GRAPE gradient of `C = 1 - Tr[ρ_T ρ_N]` in the first-order
/// approximation `∂Λ_j/∂u_kj ≈ -i dt L_k Λ_j`:
/// `∂C/∂u_kj = Re(i dt Tr(λ_j [H_k, ρ_j]))`, with `ρ_j` the state after step
/// `j` and `λ_j` the target propagated backwards through the later steps.
pub fn open_grape_gradient(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    rho0: &DensityMatrix,
    rho_t: &DensityMatrix,
) -> Result<GradientArray> {
    let opts = OracleOptions::default();
    let d = rho0.dim();
    check_dims(sys, d, &opts)?;
    check_dims(sys, rho_t.dim(), &opts)?;
    let maps = step_maps(sys, pulse, &opts)?;
    let mut states = Vec::with_capacity(pulse.steps());
    let mut v = rho0.to_vec();
    for map in &maps {
        v = map.apply(&v);
        states.push(v.clone());
    }
    let mut grad = zeros_like(pulse);
    let mut lambda = rho_t.to_vec();
    let dt = pulse.dt();
    for j in (0..pulse.steps()).rev() {
        let rho = super::unvectorize(&states[j], d);
        let lam = super::unvectorize(&lambda, d);
        for (k, hk) in sys.controls().iter().enumerate() {
            let comm = ComplexMatrix::commutator(hk, &rho)?;
            let tr = lam.matmul(&comm)?.trace();
            grad[k][j] = (C64::new(0.0, dt) * tr).re;
        }
        lambda = maps[j].apply_adjoint(&lambda);
    }
    Ok(grad)
}

/// Exact step propagator `exp(-i H_eff,j dt)` from a dense exponential.
fn dense_step(sys: &OpenSystem, pulse: &ControlPulse, j: usize) -> Result<DMatrix<C64>> {
    let h = effective_hamiltonian(sys, pulse, j)?;
    Ok(h.scale(C64::new(0.0, -pulse.dt())).to_nalgebra().exp())
}

fn apply(m: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

fn apply_adjoint(m: &DMatrix<C64>, v: &[C64]) -> Vec<C64> {
    (m.adjoint() * DVector::from_column_slice(v)).iter().copied().collect()
}

fn expect_between(u: &[C64], h: &ComplexMatrix, v: &[C64]) -> C64 {
    let mut hv = vec![C64::new(0.0, 0.0); v.len()];
    h.apply(v, &mut hv);
    inner(u, &hv).expect("equal dims")
}

/// Closed-system gradient of `C = 1 - |⟨ψ_T|ψ_N⟩|²`:
/// `∂C/∂u_kj = -2 dt Im[⟨ψ_T,j|H_k|ψ_j⟩ ⟨ψ_T|ψ_N⟩*]`.
///
/// Only `ψ_N` is kept from the forward pass; both the state and the target
/// are walked back with `U_j†` instead of being cached.
pub fn closed_grape_gradient(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    psi_t: &[C64],
) -> Result<GradientArray> {
    if !sys.channels().is_empty() && !sys.is_closed() {
        return Err(Error::ChannelsPresent);
    }
    check_dims(sys, psi0.len(), &OracleOptions::default())?;
    check_dims(sys, psi_t.len(), &OracleOptions::default())?;
    let n = pulse.steps();
    let mut psi = psi0.to_vec();
    for j in 0..n {
        psi = apply(&dense_step(sys, pulse, j)?, &psi);
    }
    let overlap = inner(psi_t, &psi)?;
    let mut chi = psi_t.to_vec();
    let mut grad = zeros_like(pulse);
    let dt = pulse.dt();
    for j in (0..n).rev() {
        for (k, hk) in sys.controls().iter().enumerate() {
            grad[k][j] = -2.0 * dt * (expect_between(&chi, hk, &psi) * overlap.conj()).im;
        }
        let u = dense_step(sys, pulse, j)?;
        psi = apply_adjoint(&u, &psi);
        chi = apply_adjoint(&u, &chi);
    }
    Ok(grad)
}

/// The two contributions to the no-jump trajectory gradient: the overlap
/// term and the term from differentiating the final normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct NoJumpTerms {
    pub overlap: GradientArray,
    pub norm: GradientArray,
    pub cost: f64,
}

/// Single-trajectory gradient of `C = 1 - |⟨ψ_T|ψ_N⟩|²` for a trajectory
/// with the given jump events `(step, channel)`, using
/// `∂M_j/∂u_kj ≈ -i dt H_k M_j`:
///
/// `∂C/∂u_kj = -2 dt (F_j/F) Im(f_jk(ψ_T) ⟨ψ_N|ψ_T⟩) + 2 (1 - C) dt (F_j/F) Im f_jk(ψ_N)`
///
/// with `f_jk(ψ) = ⟨ψ| Π_{j'>j} M_j' H_k |ψ_j⟩`, and zero at jump steps.
/// The coefficient of the second term follows from differentiating
/// `1/F_N`; writing it as `(C - 1)` gives gradients that disagree with
/// finite differences whenever the norm decays.
pub fn analytical_nojump_gradient(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    psi_t: &[C64],
    jumps: &[(usize, usize)],
) -> Result<GradientArray> {
    let t = nojump_gradient_terms(sys, pulse, psi0, psi_t, jumps)?;
    Ok(t.overlap.iter().zip(&t.norm).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect())
}

/// Both terms of [`analytical_nojump_gradient`] separately.
pub fn nojump_gradient_terms(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    psi_t: &[C64],
    jumps: &[(usize, usize)],
) -> Result<NoJumpTerms> {
    check_dims(sys, psi0.len(), &OracleOptions::default())?;
    check_dims(sys, psi_t.len(), &OracleOptions::default())?;
    let n = pulse.steps();
    let mut event = vec![None; n];
    for &(j, l) in jumps {
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        if l >= sys.channels().len() {
            return Err(Error::IndexOutOfRange { index: l, len: sys.channels().len() });
        }
        event[j] = Some(l);
    }
    // Forward pass: normalized states after every step and the step norms.
    let mut props: Vec<Option<DMatrix<C64>>> = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    let mut psi = psi0.to_vec();
    for j in 0..n {
        let next = match event[j] {
            Some(l) => {
                props.push(None);
                let mut out = vec![C64::new(0.0, 0.0); psi.len()];
                sys.channels()[l].op.apply(&psi, &mut out);
                out
            }
            None => {
                let m = dense_step(sys, pulse, j)?;
                let out = apply(&m, &psi);
                props.push(Some(m));
                out
            }
        };
        let nrm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(Error::StateAnnihilated { step: j });
        }
        psi = next.iter().map(|z| z / nrm).collect();
        norms.push(nrm);
        states.push(psi.clone());
    }
    let psi_n = psi;
    let overlap_n = inner(&psi_n, psi_t)?;
    let cost = 1.0 - overlap_n.norm_sqr();
    let dt = pulse.dt();
    let mut term1 = zeros_like(pulse);
    let mut term2 = zeros_like(pulse);
    // χ̂(ψ) = (Π_{j'>j} M_j')† ψ / Π_{j'>j} n_j'
    let mut chi_t = psi_t.to_vec();
    let mut chi_n = psi_n.clone();
    for j in (0..n).rev() {
        if event[j].is_none() {
            for (k, hk) in sys.controls().iter().enumerate() {
                let ft = expect_between(&chi_t, hk, &states[j]);
                let fn_ = expect_between(&chi_n, hk, &states[j]);
                term1[k][j] = -2.0 * dt * (ft * overlap_n).im;
                term2[k][j] = 2.0 * (1.0 - cost) * dt * fn_.im;
            }
        }
        let back = |chi: &[C64]| -> Vec<C64> {
            let raw = match (&props[j], event[j]) {
                (Some(m), _) => apply_adjoint(m, chi),
                (None, Some(l)) => {
                    let mut out = vec![C64::new(0.0, 0.0); chi.len()];
                    sys.channels()[l].op.apply_adjoint_add(chi, &mut out);
                    out
                }
                (None, None) => unreachable!(),
            };
            raw.into_iter().map(|z| z / norms[j]).collect()
        };
        chi_t = back(&chi_t);
        chi_n = back(&chi_n);
    }
    Ok(NoJumpTerms { overlap: term1, norm: term2, cost })
}
