// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a JSON document with explicit units in field names.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use jumpgrad::costs::{CostKind, CostSpec, CostTerm};
use jumpgrad::linalg::ComplexMatrix;
use jumpgrad::model::operators::{basis, destroy, projector, quadrature_p, quadrature_x, transition};
use jumpgrad::model::{build_system, ControlPulse, JcReadoutParams, OpenSystem, SystemSpec};
use jumpgrad::optimizer::{initial_pulse, OptimizeConfig};
use jumpgrad::readout::DiffusiveOptions;
use jumpgrad::trajectory::rng::{self, Purpose};
use jumpgrad::trajectory::BatchConfig;

use crate::error::CliError;
use crate::persist;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub system: SystemSpec,
    pub pulse: PulseSpec,
    pub initial_states: Vec<StateSpec>,
    #[serde(default)]
    pub cost: Vec<CostTermSpec>,
    /// `batch.seed` is replaced by the run seed.
    #[serde(default)]
    pub batch: BatchConfig,
    #[serde(default)]
    pub optimizer: OptimizeConfig,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub readout: ReadoutSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub steps: usize,
    pub dt_ns: f64,
    #[serde(default)]
    pub init: PulseInit,
}

/// Initial or fixed pulse. Amplitudes are in rad/ns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PulseInit {
    Zeros,
    /// Uniform in ±10% of the optimizer's amplitude bound (±0.1 unbounded).
    #[default]
    Random,
    /// Random sine series with `modes` terms and peak amplitude about
    /// `amplitude` per control.
    Smooth {
        amplitude: f64,
        modes: usize,
    },
    /// One constant value per control.
    Constant {
        values: Vec<f64>,
    },
    /// Readout only: constant drive giving `photons` steady-state photons
    /// (default: the critical photon number).
    Photons {
        #[serde(default)]
        photons: Option<f64>,
    },
    /// A pulse file written by `optimize`.
    File {
        path: PathBuf,
    },
}

/// A pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Basis(usize),
    /// Readout only: resonator Fock state and qubit level.
    Product([usize; 2]),
    /// `[re, im]` pairs; normalized on load.
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part {
    Re,
    Im,
}

/// A Hermitian observable, resolved against the system family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    Projector(usize),
    /// Resonator photon number (readout) or transmon excitation number.
    Photons,
    /// Transmon excitation number in either family.
    QubitNumber,
    /// `a + a†` (readout) or `b + b†` (transmon).
    Quadrature,
    /// `i(a† - a)` or `i(b† - b)`.
    QuadratureP,
    /// `|i⟩⟨j| + h.c.` (re) or `-i|i⟩⟨j| + h.c.` (im).
    Coherence {
        i: usize,
        j: usize,
        part: Part,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CostTermSpec {
    C1 {
        weight: f64,
        target: StateSpec,
    },
    C2 {
        weight: f64,
        forbidden: StateSpec,
    },
    C3 {
        weight: f64,
        op: OperatorSpec,
    },
    C4 {
        weight: f64,
        #[serde(default)]
        padded: bool,
    },
    C5 {
        weight: f64,
        #[serde(default)]
        padded: bool,
    },
    C6 {
        weight: f64,
    },
    C7 {
        weight: f64,
        sigma_steps: f64,
    },
    Cf {
        weight: f64,
        #[serde(default = "quadrature")]
        signal: OperatorSpec,
    },
    Cr {
        weight: f64,
        #[serde(default = "photons")]
        photons: OperatorSpec,
    },
    Cq {
        weight: f64,
    },
}

fn quadrature() -> OperatorSpec {
    OperatorSpec::Quadrature
}

fn photons() -> OperatorSpec {
    OperatorSpec::Photons
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSpec {
    pub trajectories: usize,
    pub sample_times: usize,
    /// Defaults to every level population plus the quadrature (or the
    /// 0-1 coherence when the family has no ladder operator).
    pub observables: Option<Vec<OperatorSpec>>,
    pub cluster_width: usize,
    /// Full per-step dumps of the first few trajectories.
    pub dump_trajectories: usize,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self { trajectories: 10_000, sample_times: 20, observables: None, cluster_width: 8, dump_trajectories: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutSpec {
    pub trajectories_per_class: usize,
    /// Normalized noise powers `P_n`.
    pub noise_powers: Vec<f64>,
    pub diffusive: DiffusiveOptions,
    /// Amplitude bound in photons (`A_n` with `n` this value); defaults to
    /// the critical photon number. Replaces `optimizer.amplitude_bound`.
    pub bound_photons: Option<f64>,
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        Self {
            trajectories_per_class: 400,
            noise_powers: (0..=20).step_by(4).map(f64::from).collect(),
            diffusive: DiffusiveOptions::default(),
            bound_photons: None,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub max_iterations: Option<usize>,
    pub target_fidelity: Option<f64>,
    pub full_scale: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            CliError::Config(format!("at `{}` (line {}, column {}): {}", e.path(), inner.line(), inner.column(), inner))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // Pulse files are relative to the config that names them.
        if let PulseInit::File { path: p } = &mut cfg.pulse.init {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(m) = o.max_iterations {
            self.optimizer.max_iterations = m;
        }
        if let Some(f) = o.target_fidelity {
            self.optimizer.target_fidelity = Some(f);
        }
        if o.full_scale {
            if let SystemSpec::JcReadout(p) = &mut self.system {
                p.resonator_levels = 30;
            }
        }
        self.batch.seed = self.seed;
    }

    /// SHA-256 of the config with the output directory blanked, so the
    /// same problem hashes the same wherever it is written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serializes")))
    }

    pub fn readout_params(&self) -> Option<&JcReadoutParams> {
        match &self.system {
            SystemSpec::JcReadout(p) => Some(p),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.pulse.steps == 0 {
            return bad("pulse.steps must be at least 1".into());
        }
        if !(self.pulse.dt_ns > 0.0) || !self.pulse.dt_ns.is_finite() {
            return bad(format!("pulse.dt_ns must be positive, got {}", self.pulse.dt_ns));
        }
        if self.initial_states.is_empty() {
            return bad("initial_states must not be empty".into());
        }
        if self.simulate.trajectories == 0 || self.simulate.sample_times == 0 {
            return bad("simulate.trajectories and simulate.sample_times must be positive".into());
        }
        if self.readout.trajectories_per_class == 0 {
            return bad("readout.trajectories_per_class must be positive".into());
        }
        if self.readout.noise_powers.iter().any(|p| !(*p >= 0.0)) {
            return bad("readout.noise_powers must be non-negative".into());
        }
        if let Some(t) = self.optimizer.target_fidelity {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("optimizer.target_fidelity must lie in [0, 1], got {t}"));
            }
        }
        self.batch.validate().map_err(|e| CliError::Config(format!("batch: {e}")))?;
        Ok(())
    }
}

/// A config resolved into core types.
pub struct Resolved {
    pub sys: OpenSystem,
    pub pulse: ControlPulse,
    pub initial_states: Vec<Vec<C64>>,
    pub cost: Option<CostSpec>,
    pub optimizer: OptimizeConfig,
}

fn cfg_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn resolve_state(spec: &StateSpec, sys: &SystemSpec, d: usize) -> Result<Vec<C64>, CliError> {
    match spec {
        StateSpec::Basis(k) if *k < d => Ok(basis(d, *k)),
        StateSpec::Basis(k) => Err(cfg_err(format!("basis state {k} out of range for d = {d}"))),
        StateSpec::Product([n, q]) => match sys {
            SystemSpec::JcReadout(p) if *n < p.resonator_levels && *q < p.qubit_levels => Ok(basis(d, p.index(*n, *q))),
            SystemSpec::JcReadout(_) => Err(cfg_err(format!("product state [{n}, {q}] out of range"))),
            _ => Err(cfg_err("product states need the jc-readout family")),
        },
        StateSpec::Amplitudes(a) => {
            if a.len() != d {
                return Err(cfg_err(format!("state has {} amplitudes, system dimension is {d}", a.len())));
            }
            let v: Vec<C64> = a.iter().map(|[re, im]| C64::new(*re, *im)).collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(cfg_err("state amplitudes must be finite and not all zero"));
            }
            Ok(v.into_iter().map(|z| z / n).collect())
        }
    }
}

/// Lowering operator of the family's "primary" mode.
fn ladder(sys: &SystemSpec) -> Option<ComplexMatrix> {
    match sys {
        SystemSpec::Transmon(p) => Some(destroy(p.levels)),
        SystemSpec::JcReadout(p) => Some(p.ladder_ops().0),
        SystemSpec::Lambda(_) => None,
    }
}

fn qubit_ladder(sys: &SystemSpec) -> Option<ComplexMatrix> {
    match sys {
        SystemSpec::Transmon(p) => Some(destroy(p.levels)),
        SystemSpec::JcReadout(p) => Some(p.ladder_ops().1),
        SystemSpec::Lambda(_) => None,
    }
}

pub fn resolve_operator(spec: &OperatorSpec, sys: &SystemSpec, d: usize) -> Result<ComplexMatrix, CliError> {
    let need =
        |m: Option<ComplexMatrix>| m.ok_or_else(|| cfg_err(format!("{spec:?} is not defined for {}", sys.name())));
    match spec {
        OperatorSpec::Projector(k) if *k < d => Ok(projector(d, *k)),
        OperatorSpec::Projector(k) => Err(cfg_err(format!("projector {k} out of range for d = {d}"))),
        OperatorSpec::Photons => {
            let a = need(ladder(sys))?;
            a.adjoint().matmul(&a).map_err(cfg_err)
        }
        OperatorSpec::QubitNumber => {
            let b = need(qubit_ladder(sys))?;
            b.adjoint().matmul(&b).map_err(cfg_err)
        }
        OperatorSpec::Quadrature => Ok(quadrature_x(&need(ladder(sys))?)),
        OperatorSpec::QuadratureP => Ok(quadrature_p(&need(ladder(sys))?)),
        OperatorSpec::Coherence { i, j, part } => {
            if *i >= d || *j >= d || i == j {
                return Err(cfg_err(format!("coherence ({i}, {j}) invalid for d = {d}")));
            }
            let t = transition(d, *i, *j);
            let c = match part {
                Part::Re => C64::new(1.0, 0.0),
                Part::Im => C64::new(0.0, -1.0),
            };
            t.scale(c).add(&t.scale(c).adjoint()).map_err(cfg_err)
        }
    }
}

/// Default observables: populations plus one quadrature-like operator.
pub fn default_observables(sys: &SystemSpec, d: usize) -> Vec<OperatorSpec> {
    let mut v: Vec<OperatorSpec> = (0..d).map(OperatorSpec::Projector).collect();
    match sys {
        SystemSpec::Lambda(_) => v.push(OperatorSpec::Coherence { i: 0, j: 1, part: Part::Re }),
        _ => {
            v.push(OperatorSpec::Quadrature);
            v.push(OperatorSpec::QuadratureP);
        }
    }
    v
}

pub fn observable_label(spec: &OperatorSpec) -> String {
    match spec {
        OperatorSpec::Projector(k) => format!("pop{k}"),
        OperatorSpec::Photons => "photons".into(),
        OperatorSpec::QubitNumber => "qubit_number".into(),
        OperatorSpec::Quadrature => "x".into(),
        OperatorSpec::QuadratureP => "p".into(),
        OperatorSpec::Coherence { i, j, part: Part::Re } => format!("re_{i}{j}"),
        OperatorSpec::Coherence { i, j, part: Part::Im } => format!("im_{i}{j}"),
    }
}

impl CostTermSpec {
    fn resolve(&self, sys: &SystemSpec, d: usize) -> Result<CostTerm, CliError> {
        let (kind, w) = match self {
            CostTermSpec::C1 { weight, target } => (CostKind::C1 { target: resolve_state(target, sys, d)? }, *weight),
            CostTermSpec::C2 { weight, forbidden } => {
                (CostKind::C2 { forbidden: resolve_state(forbidden, sys, d)? }, *weight)
            }
            CostTermSpec::C3 { weight, op } => (CostKind::C3 { op: resolve_operator(op, sys, d)? }, *weight),
            CostTermSpec::C4 { weight, padded } => (CostKind::C4 { padded: *padded }, *weight),
            CostTermSpec::C5 { weight, padded } => (CostKind::C5 { padded: *padded }, *weight),
            CostTermSpec::C6 { weight } => (CostKind::C6, *weight),
            CostTermSpec::C7 { weight, sigma_steps } => (CostKind::C7 { sigma: *sigma_steps }, *weight),
            CostTermSpec::Cf { weight, signal } => {
                (CostKind::Cf { signal: resolve_operator(signal, sys, d)? }, *weight)
            }
            CostTermSpec::Cr { weight, photons } => {
                (CostKind::Cr { photons: resolve_operator(photons, sys, d)? }, *weight)
            }
            CostTermSpec::Cq { weight } => (CostKind::Cq, *weight),
        };
        CostTerm::new(kind, w).map_err(cfg_err)
    }
}

/// Random sine series `Σ_m c_m sin(π m (j + ½) / N)` scaled to peak
/// `amplitude`.
fn smooth_pulse(
    controls: usize,
    steps: usize,
    dt: f64,
    amplitude: f64,
    modes: usize,
    seed: u64,
) -> Result<ControlPulse, CliError> {
    use rand::Rng;
    let mut r = rng::stream(seed, Purpose::PulseInit, 1, 0);
    let rows = (0..controls)
        .map(|_| {
            let c: Vec<f64> = (0..modes.max(1)).map(|_| r.gen_range(-1.0..1.0)).collect();
            let row: Vec<f64> = (0..steps)
                .map(|j| {
                    let x = (j as f64 + 0.5) / steps as f64;
                    c.iter().enumerate().map(|(m, cm)| cm * (std::f64::consts::PI * (m + 1) as f64 * x).sin()).sum()
                })
                .collect();
            let peak = row.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
            row.into_iter().map(|x| amplitude * x / peak).collect()
        })
        .collect();
    ControlPulse::new(dt, rows).map_err(cfg_err)
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        self.validate()?;
        let sys = build_system(&self.system).map_err(cfg_err)?;
        let d = sys.dim();
        let k = sys.controls().len();
        let (n, dt) = (self.pulse.steps, self.pulse.dt_ns);
        let mut optimizer = self.optimizer.clone();
        let reference = match self.readout_params() {
            Some(p) => Some(jumpgrad::readout::photon_reference(p).map_err(CliError::Numerical)?),
            None => None,
        };
        if let (Some(r), Some(p)) = (&reference, self.readout_params()) {
            optimizer.amplitude_bound = Some(r.amplitude(self.readout.bound_photons.unwrap_or(p.n_crit())));
        }
        let pulse = match &self.pulse.init {
            PulseInit::Zeros => ControlPulse::zeros(k, n, dt).map_err(cfg_err)?,
            PulseInit::Random => initial_pulse(k, n, dt, optimizer.amplitude_bound, self.seed).map_err(cfg_err)?,
            PulseInit::Smooth { amplitude, modes } => smooth_pulse(k, n, dt, *amplitude, *modes, self.seed)?,
            PulseInit::Constant { values } => {
                if values.len() != k {
                    return Err(cfg_err(format!("constant pulse has {} values for {k} controls", values.len())));
                }
                ControlPulse::new(dt, values.iter().map(|v| vec![*v; n]).collect()).map_err(cfg_err)?
            }
            PulseInit::Photons { photons } => {
                let (Some(r), Some(p)) = (&reference, self.readout_params()) else {
                    return Err(cfg_err("photons pulse needs the jc-readout family"));
                };
                let a = r.amplitude(photons.unwrap_or(p.n_crit()));
                ControlPulse::new(dt, vec![vec![a; n]; k]).map_err(cfg_err)?
            }
            PulseInit::File { path } => {
                let p = persist::read_pulse(path)?;
                if p.controls() != k || p.steps() != n || (p.dt() - dt).abs() > 1e-12 * dt {
                    return Err(cfg_err(format!("pulse file {} does not match pulse spec", path.display())));
                }
                p
            }
        };
        let initial_states =
            self.initial_states.iter().map(|s| resolve_state(s, &self.system, d)).collect::<Result<Vec<_>, _>>()?;
        let cost = if self.cost.is_empty() {
            None
        } else {
            let terms = self.cost.iter().map(|t| t.resolve(&self.system, d)).collect::<Result<Vec<_>, _>>()?;
            Some(CostSpec::new(terms).map_err(cfg_err)?)
        };
        Ok(Resolved { sys, pulse, initial_states, cost, optimizer })
    }
}
