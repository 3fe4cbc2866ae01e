// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::operators::{destroy, number, quadrature_x, transition};
use super::{Channel, OpenSystem};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Transmon ladder with x and z controls and T1 relaxation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmonParams {
    pub levels: usize,
    pub omega_ge_ghz: f64,
    pub anharmonicity_ghz: f64,
    /// Relaxation time; `None` gives a closed system.
    pub t1_ns: Option<f64>,
}

impl Default for TransmonParams {
    fn default() -> Self {
        Self { levels: 4, omega_ge_ghz: 3.9, anharmonicity_ghz: -0.225, t1_ns: None }
    }
}

/// Three-level Λ system driven by one field on both transitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaParams {
    pub omega_ghz: [f64; 3],
    /// Ratio of the |2⟩–|3⟩ to the |1⟩–|2⟩ coupling.
    pub alpha: f64,
    pub t1_ns: f64,
    /// Fractions of 1/T1 going to |1⟩ and |3⟩.
    pub branching: [f64; 2],
}

impl Default for LambdaParams {
    fn default() -> Self {
        Self { omega_ghz: [0.0, 5.0, 1.8], alpha: 1.0, t1_ns: 20.0, branching: [0.5, 0.5] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JcFrame {
    /// Frame rotating at the drive frequency; the control is the real drive
    /// envelope on `a + a†`.
    Rotating,
    /// Bare frequencies; the control must carry the carrier itself.
    Lab,
}

/// Resonator coupled to a transmon, both damped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JcReadoutParams {
    pub resonator_levels: usize,
    pub qubit_levels: usize,
    pub omega_q_ghz: f64,
    pub omega_r_ghz: f64,
    pub omega_d_ghz: f64,
    pub g_ghz: f64,
    pub anharmonicity_ghz: f64,
    pub kappa_per_us: f64,
    pub gamma_per_us: f64,
    pub frame: JcFrame,
}

impl Default for JcReadoutParams {
    fn default() -> Self {
        Self {
            resonator_levels: 15,
            qubit_levels: 3,
            omega_q_ghz: 4.6,
            omega_r_ghz: 5.0,
            omega_d_ghz: 5.0,
            g_ghz: 0.05,
            anharmonicity_ghz: -0.225,
            kappa_per_us: 50.0,
            gamma_per_us: 1.0,
            frame: JcFrame::Rotating,
        }
    }
}

impl JcReadoutParams {
    pub fn dim(&self) -> usize {
        self.resonator_levels * self.qubit_levels
    }

    /// `Δ² / 4g²` with `Δ = ω_q - ω_r`.
    pub fn n_crit(&self) -> f64 {
        let delta = self.omega_q_ghz - self.omega_r_ghz;
        delta * delta / (4.0 * self.g_ghz * self.g_ghz)
    }

    /// Resonator `a` and transmon `b` on the joint space (resonator ⊗ qubit).
    pub fn ladder_ops(&self) -> (ComplexMatrix, ComplexMatrix) {
        let ir = ComplexMatrix::identity(self.resonator_levels);
        let iq = ComplexMatrix::identity(self.qubit_levels);
        (destroy(self.resonator_levels).kron(&iq), ir.kron(&destroy(self.qubit_levels)))
    }

    /// Joint basis index of resonator Fock state `n` and qubit level `q`.
    pub fn index(&self, n: usize, q: usize) -> usize {
        n * self.qubit_levels + q
    }
}

/// A named system family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SystemSpec {
    Transmon(TransmonParams),
    Lambda(LambdaParams),
    JcReadout(JcReadoutParams),
}

impl SystemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Transmon(_) => "transmon",
            SystemSpec::Lambda(_) => "lambda",
            SystemSpec::JcReadout(_) => "jc-readout",
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

fn anharmonic_ladder(levels: usize, omega: f64, alpha: f64) -> ComplexMatrix {
    let diag: Vec<C64> = (0..levels)
        .map(|n| {
            let n = n as f64;
            C64::new(omega * n + 0.5 * alpha * n * (n - 1.0), 0.0)
        })
        .collect();
    ComplexMatrix::diagonal(&diag)
}

/// Build one of the showcase systems.
pub fn build_system(spec: &SystemSpec) -> Result<OpenSystem> {
    match spec {
        SystemSpec::Transmon(p) => {
            if p.levels < 2 {
                return Err(Error::InvalidParameter("transmon needs at least 2 levels".into()));
            }
            finite("omega_ge_ghz", p.omega_ge_ghz)?;
            finite("anharmonicity_ghz", p.anharmonicity_ghz)?;
            let b = destroy(p.levels);
            let h0 = anharmonic_ladder(p.levels, TWO_PI * p.omega_ge_ghz, TWO_PI * p.anharmonicity_ghz);
            let controls = vec![quadrature_x(&b), number(p.levels)];
            let mut channels = Vec::new();
            if let Some(t1) = p.t1_ns {
                positive("t1_ns", t1)?;
                channels.push(Channel { op: b, rate: 1.0 / t1 });
            }
            OpenSystem::new(h0, controls, channels)
        }
        SystemSpec::Lambda(p) => {
            positive("t1_ns", p.t1_ns)?;
            for (i, w) in p.omega_ghz.iter().enumerate() {
                finite(&format!("omega_ghz[{i}]"), *w)?;
            }
            if p.branching.iter().any(|b| !(*b >= 0.0)) {
                return Err(Error::InvalidParameter("branching fractions must be non-negative".into()));
            }
            let h0 = ComplexMatrix::diagonal(&p.omega_ghz.map(|w| C64::new(TWO_PI * w, 0.0)));
            let h12 = transition(3, 0, 1).add(&transition(3, 1, 0))?;
            let h23 = transition(3, 1, 2).add(&transition(3, 2, 1))?;
            let control = h12.add_scaled(&h23, C64::new(p.alpha, 0.0))?;
            let gamma = 1.0 / p.t1_ns;
            let channels = vec![
                Channel { op: transition(3, 0, 1), rate: gamma * p.branching[0] },
                Channel { op: transition(3, 2, 1), rate: gamma * p.branching[1] },
            ];
            OpenSystem::new(h0, vec![control], channels)
        }
        SystemSpec::JcReadout(p) => {
            if p.resonator_levels < 2 || p.qubit_levels < 2 {
                return Err(Error::InvalidParameter("jc-readout needs at least 2 levels per mode".into()));
            }
            for (n, x) in [
                ("omega_q_ghz", p.omega_q_ghz),
                ("omega_r_ghz", p.omega_r_ghz),
                ("omega_d_ghz", p.omega_d_ghz),
                ("g_ghz", p.g_ghz),
                ("anharmonicity_ghz", p.anharmonicity_ghz),
            ] {
                finite(n, x)?;
            }
            if !(p.kappa_per_us >= 0.0) || !(p.gamma_per_us >= 0.0) {
                return Err(Error::InvalidParameter("decay rates must be non-negative".into()));
            }
            let (a, b) = p.ladder_ops();
            let shift = match p.frame {
                JcFrame::Rotating => p.omega_d_ghz,
                JcFrame::Lab => 0.0,
            };
            let nr = number(p.resonator_levels).kron(&ComplexMatrix::identity(p.qubit_levels));
            let qubit = ComplexMatrix::identity(p.resonator_levels).kron(&anharmonic_ladder(
                p.qubit_levels,
                TWO_PI * (p.omega_q_ghz - shift),
                TWO_PI * p.anharmonicity_ghz,
            ));
            let coupling = a.adjoint().matmul(&b)?.add(&a.matmul(&b.adjoint())?)?;
            let h0 = nr
                .scale(C64::new(TWO_PI * (p.omega_r_ghz - shift), 0.0))
                .add(&qubit)?
                .add_scaled(&coupling, C64::new(TWO_PI * p.g_ghz, 0.0))?;
            let channels = vec![
                Channel { op: a.clone(), rate: p.kappa_per_us * 1e-3 },
                Channel { op: b, rate: p.gamma_per_us * 1e-3 },
            ];
            OpenSystem::new(h0, vec![quadrature_x(&a)], channels)
        }
    }
}
