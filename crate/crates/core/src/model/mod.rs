// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Open quantum systems, piecewise-constant pulses and per-step propagation.
//!
//! Units: angular frequencies in rad/ns, times in ns. Step indices are
//! zero-based: step `j` covers `[j dt, (j+1) dt)`.

mod factories;
pub mod operators;

pub use factories::{build_system, JcFrame, JcReadoutParams, LambdaParams, SystemSpec, TransmonParams, TWO_PI};

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matvec_exp_with, spmv, ComplexMatrix, StateBatch, TaylorOptions};

const HERMITIAN_TOL: f64 = 1e-12;

/// A jump operator with its rate.
#[derive(Clone, Debug)]
pub struct Channel {
    pub op: ComplexMatrix,
    pub rate: f64,
}

/// Numerical controls for per-step propagation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSettings {
    pub taylor: TaylorOptions,
    /// Steps whose generator has 1-norm above this are split into equal
    /// substeps.
    pub max_substep_norm: f64,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self { taylor: TaylorOptions::default(), max_substep_norm: 4.0 }
    }
}

/// Drift Hamiltonian, control Hamiltonians and decay channels.
#[derive(Clone, Debug)]
pub struct OpenSystem {
    dim: usize,
    h0: ComplexMatrix,
    controls: Vec<ComplexMatrix>,
    channels: Vec<Channel>,
    /// `H0 - (i/2) Σ γ c†c`
    h_eff0: ComplexMatrix,
    pub settings: PropagationSettings,
}

impl OpenSystem {
    pub fn new(h0: ComplexMatrix, controls: Vec<ComplexMatrix>, channels: Vec<Channel>) -> Result<Self> {
        if !h0.is_square() {
            return Err(Error::NonSquare { rows: h0.rows(), cols: h0.cols() });
        }
        let dim = h0.rows();
        let check = |m: &ComplexMatrix, what: &str| -> Result<()> {
            if m.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!("{what} is {:?}, expected {dim}x{dim}", m.shape())));
            }
            Ok(())
        };
        if h0.hermiticity_error() > HERMITIAN_TOL {
            return Err(Error::InvalidParameter("drift Hamiltonian is not Hermitian".into()));
        }
        for (k, h) in controls.iter().enumerate() {
            check(h, "control Hamiltonian")?;
            if h.hermiticity_error() > HERMITIAN_TOL {
                return Err(Error::InvalidParameter(format!("control Hamiltonian {k} is not Hermitian")));
            }
        }
        let mut decay = ComplexMatrix::sparse_zeros(dim, dim);
        for (l, ch) in channels.iter().enumerate() {
            check(&ch.op, "jump operator")?;
            if !(ch.rate >= 0.0) || !ch.rate.is_finite() {
                return Err(Error::InvalidParameter(format!("channel {l} has invalid rate {}", ch.rate)));
            }
            let cdc = ch.op.adjoint().to_sparse().matmul(&ch.op.to_sparse())?;
            decay = decay.add_scaled(&cdc, C64::new(ch.rate, 0.0))?;
        }
        let h_eff0 = h0.to_sparse().add_scaled(&decay, C64::new(0.0, -0.5))?;
        Ok(Self { dim, h0, controls, channels, h_eff0, settings: PropagationSettings::default() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.controls
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Drift part of the effective Hamiltonian.
    pub fn h_eff0(&self) -> &ComplexMatrix {
        &self.h_eff0
    }

    /// True when every channel rate is zero (or there are none).
    pub fn is_closed(&self) -> bool {
        self.channels.iter().all(|c| c.rate == 0.0)
    }

    /// Same Hamiltonians with all channels removed.
    pub fn without_channels(&self) -> Self {
        let mut s = Self::new(self.h0.clone(), self.controls.clone(), Vec::new()).expect("validated");
        s.settings = self.settings;
        s
    }

    /// Same Hamiltonians with every channel rate multiplied by `factor`.
    pub fn with_rates_scaled(&self, factor: f64) -> Result<Self> {
        let chans = self.channels.iter().map(|c| Channel { op: c.op.clone(), rate: c.rate * factor }).collect();
        let mut s = Self::new(self.h0.clone(), self.controls.clone(), chans)?;
        s.settings = self.settings;
        Ok(s)
    }

    fn check_pulse(&self, pulse: &ControlPulse, j: usize) -> Result<()> {
        if pulse.controls() != self.controls.len() {
            return Err(Error::DimensionMismatch(format!(
                "pulse has {} controls, system has {}",
                pulse.controls(),
                self.controls.len()
            )));
        }
        if j >= pulse.steps() {
            return Err(Error::IndexOutOfRange { index: j, len: pulse.steps() });
        }
        Ok(())
    }

    /// Number of Taylor substeps used for a generator of the given 1-norm.
    pub fn substeps_for(&self, generator_norm: f64) -> usize {
        ((generator_norm / self.settings.max_substep_norm).ceil() as usize).max(1)
    }

    /// Substep generator `-i H_eff,j dt / s` and the substep count `s`.
    pub fn step_generator(&self, pulse: &ControlPulse, j: usize) -> Result<(ComplexMatrix, usize)> {
        let h = effective_hamiltonian(self, pulse, j)?;
        let full = h.scale(C64::new(0.0, -pulse.dt()));
        let s = self.substeps_for(full.norm_one());
        Ok((full.scale(C64::new(1.0 / s as f64, 0.0)), s))
    }
}

/// Piecewise-constant amplitudes `u[k][j]` for K controls over N steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    dt: f64,
    /// One row per control.
    amplitudes: Vec<Vec<f64>>,
}

impl ControlPulse {
    pub fn new(dt: f64, amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let n = amplitudes.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidParameter("pulse needs at least one step".into()));
        }
        if amplitudes.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch("pulse rows differ in length".into()));
        }
        if amplitudes.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("pulse amplitudes"));
        }
        Ok(Self { dt, amplitudes })
    }

    pub fn zeros(controls: usize, steps: usize, dt: f64) -> Result<Self> {
        if controls == 0 {
            return Err(Error::InvalidParameter("pulse needs at least one control".into()));
        }
        Self::new(dt, vec![vec![0.0; steps]; controls])
    }

    /// Uniform random amplitudes in `±fraction · bound`.
    pub fn random<R: Rng>(
        controls: usize,
        steps: usize,
        dt: f64,
        bound: f64,
        fraction: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let a = bound * fraction;
        let rows = (0..controls)
            .map(|_| (0..steps).map(|_| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 }).collect())
            .collect();
        Self::new(dt, rows)
    }

    pub fn controls(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn steps(&self) -> usize {
        self.amplitudes[0].len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.amplitudes[k][j]
    }

    pub fn set(&mut self, k: usize, j: usize, x: f64) {
        self.amplitudes[k][j] = x;
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.amplitudes[k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.amplitudes
    }

    /// Flattened control-major copy.
    pub fn flat(&self) -> Vec<f64> {
        self.amplitudes.iter().flatten().copied().collect()
    }

    pub fn from_flat(controls: usize, dt: f64, flat: &[f64]) -> Result<Self> {
        if controls == 0 || flat.len() % controls != 0 {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for {controls} controls", flat.len())));
        }
        let n = flat.len() / controls;
        Self::new(dt, flat.chunks(n).map(|c| c.to_vec()).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.amplitudes.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Clip every amplitude into `[-bound, bound]`.
    pub fn clip(&mut self, bound: f64) {
        for x in self.amplitudes.iter_mut().flatten() {
            *x = x.clamp(-bound, bound);
        }
    }
}

/// `H0 + Σ_k u[k][j] H_k`.
pub fn hamiltonian_at_step(sys: &OpenSystem, pulse: &ControlPulse, j: usize) -> Result<ComplexMatrix> {
    sys.check_pulse(pulse, j)?;
    let mut h = sys.h0.to_sparse();
    for (k, hk) in sys.controls.iter().enumerate() {
        let u = pulse.get(k, j);
        if u != 0.0 {
            h = h.add_scaled(hk, C64::new(u, 0.0))?;
        }
    }
    Ok(h)
}

/// `H_j - (i/2) Σ_l γ_l c_l† c_l`.
pub fn effective_hamiltonian(sys: &OpenSystem, pulse: &ControlPulse, j: usize) -> Result<ComplexMatrix> {
    sys.check_pulse(pulse, j)?;
    let mut h = sys.h_eff0.clone();
    for (k, hk) in sys.controls.iter().enumerate() {
        let u = pulse.get(k, j);
        if u != 0.0 {
            h = h.add_scaled(hk, C64::new(u, 0.0))?;
        }
    }
    Ok(h)
}

/// One propagation step without renormalization: `exp(-i H_eff dt) V` for
/// `event = None`, `c_l V` for `event = Some(l)`.
///
/// Steps with a large generator norm are applied as equal substeps, each a
/// separate Taylor series.
pub fn step_propagate(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    j: usize,
    v: &StateBatch,
    event: Option<usize>,
) -> Result<StateBatch> {
    sys.check_pulse(pulse, j)?;
    match event {
        Some(l) => {
            let ch = sys.channels.get(l).ok_or(Error::IndexOutOfRange { index: l, len: sys.channels.len() })?;
            spmv(&ch.op, v)
        }
        None => {
            let (a, s) = sys.step_generator(pulse, j)?;
            apply_substeps(&a, s, v, sys.settings.taylor)
        }
    }
}

pub(crate) fn apply_substeps(a: &ComplexMatrix, s: usize, v: &StateBatch, taylor: TaylorOptions) -> Result<StateBatch> {
    let mut out = matvec_exp_with(a, v, taylor)?;
    for _ in 1..s {
        out = matvec_exp_with(a, &out, taylor)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::operators::*;
    use super::*;

    fn qubit(gamma: f64) -> OpenSystem {
        let h0 = ComplexMatrix::diagonal(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let x = quadrature_x(&destroy(2));
        OpenSystem::new(h0, vec![x], vec![Channel { op: destroy(2), rate: gamma }]).unwrap()
    }

    #[test]
    fn hamiltonian_assembly() {
        let sys = qubit(0.0);
        let mut p = ControlPulse::zeros(1, 3, 0.1).unwrap();
        assert_eq!(hamiltonian_at_step(&sys, &p, 0).unwrap().to_dense(), sys.h0().to_dense());
        p.set(0, 1, 1.0);
        let h = hamiltonian_at_step(&sys, &p, 1).unwrap();
        assert!(h.max_abs_diff(&sys.h0().add(&sys.controls()[0]).unwrap()) < 1e-15);
        assert!(matches!(hamiltonian_at_step(&sys, &p, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn effective_hamiltonian_two_level() {
        let g = 0.3;
        let sys = qubit(g);
        let p = ControlPulse::zeros(1, 1, 0.1).unwrap();
        let h = effective_hamiltonian(&sys, &p, 0).unwrap();
        let expect = sys.h0().add_scaled(&projector(2, 1), C64::new(0.0, -g / 2.0)).unwrap();
        assert!(h.max_abs_diff(&expect) < 1e-15);
        let closed = qubit(0.0);
        assert!(
            effective_hamiltonian(&closed, &p, 0).unwrap().max_abs_diff(&hamiltonian_at_step(&closed, &p, 0).unwrap())
                < 1e-15
        );
    }

    #[test]
    fn unitary_step_preserves_norm() {
        let sys = qubit(0.0);
        let p = ControlPulse::new(0.1, vec![vec![0.7]]).unwrap();
        let v = StateBatch::from_vector(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let out = step_propagate(&sys, &p, 0, &v, None).unwrap();
        assert!((out.norms2()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn undriven_decay_matches_exponential() {
        let g = 1.0;
        let sys = qubit(g);
        let n = 100;
        let dt = 0.01;
        let p = ControlPulse::zeros(1, n, dt).unwrap();
        let mut v = StateBatch::basis(2, 1).unwrap();
        for j in 0..n {
            v = step_propagate(&sys, &p, j, &v, None).unwrap();
        }
        assert!((v.norms2()[0] - (-g * dt * n as f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn jump_event_applies_operator() {
        let sys = qubit(1.0);
        let p = ControlPulse::zeros(1, 1, 0.1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = StateBatch::from_vector(&[C64::new(s, 0.0), C64::new(s, 0.0)]);
        let out = step_propagate(&sys, &p, 0, &v, Some(0)).unwrap();
        assert!((out.column(0)[0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert_eq!(out.column(0)[1], C64::new(0.0, 0.0));
        assert!(step_propagate(&sys, &p, 0, &v, Some(1)).is_err());
    }

    #[test]
    fn rejects_non_hermitian_and_negative_rates() {
        let h0 = destroy(2);
        assert!(OpenSystem::new(h0, vec![], vec![]).is_err());
        let h0 = number(2);
        assert!(OpenSystem::new(h0, vec![], vec![Channel { op: destroy(2), rate: -1.0 }]).is_err());
    }

    #[test]
    fn pulse_flat_round_trip_and_clip() {
        let mut p = ControlPulse::new(0.5, vec![vec![1.0, -3.0], vec![0.5, 2.0]]).unwrap();
        let q = ControlPulse::from_flat(2, 0.5, &p.flat()).unwrap();
        assert_eq!(p, q);
        p.clip(1.5);
        assert_eq!(p.max_abs(), 1.5);
        assert!(ControlPulse::new(0.0, vec![vec![1.0]]).is_err());
        assert!(ControlPulse::new(0.1, vec![vec![]]).is_err());
    }
}
