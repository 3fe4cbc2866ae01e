// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Trajectory and pulse cost functions.
//!
//! State costs are reduced to per-trajectory statistics (see
//! [`TrajectoryStat`]) which are averaged over an ensemble. The total cost is
//! then recorded on a small tape whose leaves are those averages and the
//! pulse amplitudes, so its reverse pass yields both the seeds for the
//! trajectory tapes and the direct pulse gradient.

use num_complex::Complex64 as C64;

use crate::autodiff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::model::ControlPulse;
use crate::trajectory::TrajectoryStat;

/// One cost function. Sums over time run over the states `ψ_0 … ψ_{N-1}`.
#[derive(Clone, Debug)]
pub enum CostKind {
    /// `1 - |⟨ψ_T|ψ_N⟩|²`
    C1 { target: Vec<C64> },
    /// `Σ_j |⟨ψ_f|ψ_j⟩|²`
    C2 { forbidden: Vec<C64> },
    /// `Σ_j ⟨ψ_j|O|ψ_j⟩`
    C3 { op: ComplexMatrix },
    /// `Σ_kj |u_kj - u_k,j-1|²` over interior differences; `padded` adds
    /// virtual zeros before the first and after the last step.
    C4 { padded: bool },
    /// `Σ_kj |u_k,j+1 - 2 u_kj + u_k,j-1|²`, interior or zero-padded.
    C5 { padded: bool },
    /// `Σ_kj |u_kj|²`
    C6,
    /// `Σ_kj |(1 - exp(-(j - (N-1)/2)² / 2σ²)) u_kj|²`, σ in steps.
    C7 { sigma: f64 },
    /// `-((1/T) ∫ (s̄_0 - s̄_1) dt)²` with `s = ⟨signal⟩`.
    Cf { signal: ComplexMatrix },
    /// `(1/T) Σ_i ∫ ⟨photons⟩_i dt`
    Cr { photons: ComplexMatrix },
    /// `1 - mean |⟨ψ_N|ψ_0⟩|²`
    Cq,
}

impl CostKind {
    pub fn label(&self) -> &'static str {
        match self {
            CostKind::C1 { .. } => "C1",
            CostKind::C2 { .. } => "C2",
            CostKind::C3 { .. } => "C3",
            CostKind::C4 { .. } => "C4",
            CostKind::C5 { .. } => "C5",
            CostKind::C6 => "C6",
            CostKind::C7 { .. } => "C7",
            CostKind::Cf { .. } => "Cf",
            CostKind::Cr { .. } => "Cr",
            CostKind::Cq => "Cq",
        }
    }

    pub fn is_pulse_cost(&self) -> bool {
        matches!(self, CostKind::C4 { .. } | CostKind::C5 { .. } | CostKind::C6 | CostKind::C7 { .. })
    }
}

#[derive(Clone, Debug)]
pub struct CostTerm {
    pub kind: CostKind,
    pub weight: f64,
}

impl CostTerm {
    pub fn new(kind: CostKind, weight: f64) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidParameter(format!("{} weight must be finite and non-negative", kind.label())));
        }
        if let CostKind::C7 { sigma } = kind {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter(format!("C7 sigma must be positive, got {sigma}")));
            }
        }
        Ok(Self { kind, weight })
    }
}

/// Weighted sum of cost terms.
#[derive(Clone, Debug)]
pub struct CostSpec {
    pub terms: Vec<CostTerm>,
}

/// Where each term reads its statistics.
#[derive(Clone, Debug)]
enum Slot {
    /// Stat index within every ensemble.
    Stats(Vec<usize>),
    Pulse,
}

/// Statistics each ensemble must record for a [`CostSpec`].
#[derive(Clone, Debug)]
pub struct CostLayout {
    pub stats: Vec<Vec<TrajectoryStat>>,
    slots: Vec<Slot>,
}

/// Value and derivatives of the total cost.
#[derive(Clone, Debug, PartialEq)]
pub struct CostValue {
    pub total: f64,
    /// Unweighted value of each term.
    pub terms: Vec<f64>,
    /// `∂C/∂(mean stat)` per ensemble, in [`CostLayout::stats`] order.
    pub stat_seeds: Vec<Vec<f64>>,
    /// Gradient of the pulse terms, `[control][step]`.
    pub pulse_gradient: Vec<Vec<f64>>,
}

impl CostSpec {
    pub fn new(terms: Vec<CostTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("cost terms"));
        }
        Ok(Self { terms })
    }

    /// Statistics for ensembles started from `initial_states` over a pulse
    /// with the given step and duration.
    pub fn layout(&self, initial_states: &[Vec<C64>], dt: f64, duration: f64) -> Result<CostLayout> {
        let e = initial_states.len();
        if e == 0 {
            return Err(Error::Empty("ensembles"));
        }
        let dim = initial_states[0].len();
        if initial_states.iter().any(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch("initial states of different dimension".into()));
        }
        let check_state = |v: &Vec<C64>, what: &str| -> Result<()> {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!("{what} of length {} for d = {dim}", v.len())));
            }
            Ok(())
        };
        let check_op = |m: &ComplexMatrix, what: &str| -> Result<()> {
            if m.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!("{what} of shape {:?} for d = {dim}", m.shape())));
            }
            if !m.is_hermitian(1e-12) {
                return Err(Error::InvalidParameter(format!("{what} must be Hermitian")));
            }
            Ok(())
        };
        let mut stats: Vec<Vec<TrajectoryStat>> = vec![Vec::new(); e];
        let mut slots = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let per: Vec<TrajectoryStat> = match &term.kind {
                k if k.is_pulse_cost() => {
                    slots.push(Slot::Pulse);
                    continue;
                }
                CostKind::C1 { target } => {
                    check_state(target, "C1 target")?;
                    vec![TrajectoryStat::FinalOverlap { target: target.clone() }; e]
                }
                CostKind::C2 { forbidden } => {
                    check_state(forbidden, "C2 forbidden state")?;
                    vec![TrajectoryStat::SumOverlap { state: forbidden.clone() }; e]
                }
                CostKind::C3 { op } => {
                    check_op(op, "C3 operator")?;
                    vec![TrajectoryStat::SumExpectation { op: op.clone(), weight: 1.0 }; e]
                }
                CostKind::Cf { signal } => {
                    check_op(signal, "Cf signal operator")?;
                    if e != 2 {
                        return Err(Error::InvalidParameter(format!("Cf needs exactly two ensembles, got {e}")));
                    }
                    vec![TrajectoryStat::SumExpectation { op: signal.clone(), weight: dt / duration }; e]
                }
                CostKind::Cr { photons } => {
                    check_op(photons, "Cr photon operator")?;
                    vec![TrajectoryStat::SumExpectation { op: photons.clone(), weight: dt / duration }; e]
                }
                CostKind::Cq => {
                    initial_states.iter().map(|s| TrajectoryStat::FinalOverlap { target: s.clone() }).collect()
                }
                _ => unreachable!("pulse costs handled above"),
            };
            let idx = per
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    stats[i].push(s);
                    stats[i].len() - 1
                })
                .collect();
            slots.push(Slot::Stats(idx));
        }
        Ok(CostLayout { stats, slots })
    }

    /// Evaluate the weighted total from ensemble-mean statistics and the
    /// pulse, with derivatives.
    pub fn evaluate(&self, layout: &CostLayout, means: &[Vec<f64>], pulse: &ControlPulse) -> Result<CostValue> {
        total_cost(self, layout, means, pulse)
    }
}

/// Record `spec` on a fresh tape and differentiate it. `means[e][i]` is the
/// mean of `layout.stats[e][i]` over ensemble `e`.
pub fn total_cost(spec: &CostSpec, layout: &CostLayout, means: &[Vec<f64>], pulse: &ControlPulse) -> Result<CostValue> {
    if means.len() != layout.stats.len() || means.iter().zip(&layout.stats).any(|(m, s)| m.len() != s.len()) {
        return Err(Error::HorizonMismatch("ensemble statistics do not match the cost layout".into()));
    }
    if layout.slots.len() != spec.terms.len() {
        return Err(Error::InvalidParameter("layout was built for a different cost spec".into()));
    }
    let mut tape = Tape::new();
    let stat_leaves: Vec<Vec<NodeId>> = means.iter().map(|m| m.iter().map(|&x| tape.leaf_real(x)).collect()).collect();
    let u_leaves: Vec<Vec<NodeId>> = if spec.terms.iter().any(|t| t.kind.is_pulse_cost()) {
        pulse.rows().iter().map(|row| row.iter().map(|&x| tape.leaf_real(x)).collect()).collect()
    } else {
        Vec::new()
    };
    let e = means.len() as f64;
    let mut term_nodes = Vec::with_capacity(spec.terms.len());
    for (term, slot) in spec.terms.iter().zip(&layout.slots) {
        let node = match (slot, &term.kind) {
            (Slot::Pulse, kind) => eval_pulse_costs(&mut tape, kind, &u_leaves)?,
            (Slot::Stats(idx), kind) => {
                let leaves: Vec<NodeId> = idx.iter().enumerate().map(|(i, &s)| stat_leaves[i][s]).collect();
                let sum = tape.add_all(&leaves)?;
                match kind {
                    CostKind::C1 { .. } | CostKind::Cq => {
                        let mean = tape.scale(C64::new(1.0 / e, 0.0), sum)?;
                        tape.sub(1.0, mean)?
                    }
                    CostKind::C2 { .. } | CostKind::C3 { .. } => tape.scale(C64::new(1.0 / e, 0.0), sum)?,
                    CostKind::Cr { .. } => sum,
                    CostKind::Cf { .. } => {
                        let diff = tape.sub(leaves[0], leaves[1])?;
                        let sq = tape.mul(diff, diff)?;
                        tape.scale(C64::new(-1.0, 0.0), sq)?
                    }
                    _ => unreachable!("pulse costs use the pulse slot"),
                }
            }
        };
        term_nodes.push(node);
    }
    let weighted = spec
        .terms
        .iter()
        .zip(&term_nodes)
        .map(|(t, &n)| tape.scale(C64::new(t.weight, 0.0), n))
        .collect::<Result<Vec<_>>>()?;
    let total = tape.add_all(&weighted)?;
    let grads = tape.backward(total)?;
    Ok(CostValue {
        total: tape.scalar(total).re,
        terms: term_nodes.iter().map(|&n| tape.scalar(n).re).collect(),
        stat_seeds: stat_leaves.iter().map(|row| row.iter().map(|&l| grads.real(l)).collect()).collect(),
        pulse_gradient: if u_leaves.is_empty() {
            vec![vec![0.0; pulse.steps()]; pulse.controls()]
        } else {
            u_leaves.iter().map(|row| row.iter().map(|&l| grads.real(l)).collect()).collect()
        },
    })
}

/// Record a pulse cost on `tape` from amplitude leaves `u[k][j]`.
pub fn eval_pulse_costs(tape: &mut Tape, kind: &CostKind, u: &[Vec<NodeId>]) -> Result<NodeId> {
    let mut parts = Vec::new();
    for row in u {
        let n = row.len();
        match kind {
            CostKind::C4 { padded } => {
                for j in 1..n {
                    let d = tape.sub(row[j], row[j - 1])?;
                    parts.push(tape.mul(d, d)?);
                }
                if *padded && n > 0 {
                    parts.push(tape.mul(row[0], row[0])?);
                    parts.push(tape.mul(row[n - 1], row[n - 1])?);
                }
            }
            CostKind::C5 { padded } => {
                let range = if *padded { 0..n } else { 1..n.saturating_sub(1) };
                for j in range {
                    let two = tape.scale(C64::new(-2.0, 0.0), row[j])?;
                    let mut acc = two;
                    if j + 1 < n {
                        acc = tape.add(acc, row[j + 1])?;
                    }
                    if j > 0 {
                        acc = tape.add(acc, row[j - 1])?;
                    }
                    parts.push(tape.mul(acc, acc)?);
                }
            }
            CostKind::C6 => {
                for &x in row {
                    parts.push(tape.mul(x, x)?);
                }
            }
            CostKind::C7 { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!("C7 sigma must be positive, got {sigma}")));
                }
                let centre = (n as f64 - 1.0) / 2.0;
                for (j, &x) in row.iter().enumerate() {
                    let w = 1.0 - (-(j as f64 - centre).powi(2) / (2.0 * sigma * sigma)).exp();
                    let s = tape.scale(C64::new(w, 0.0), x)?;
                    parts.push(tape.mul(s, s)?);
                }
            }
            other => return Err(Error::InvalidParameter(format!("{} is not a pulse cost", other.label()))),
        }
    }
    if parts.is_empty() {
        return Ok(tape.constant(0.0));
    }
    tape.add_all(&parts)
}

/// Record a state cost on `tape` from per-time state nodes `ψ_0 … ψ_N`
/// (each a d×1 column).
pub fn eval_state_costs(tape: &mut Tape, kind: &CostKind, states: &[NodeId]) -> Result<NodeId> {
    let (last, rest) = states.split_last().ok_or(Error::Empty("trajectory states"))?;
    match kind {
        CostKind::C1 { target } => {
            let f = tape.overlap_sq(ComplexMatrix::column(target), *last)?;
            tape.sub(1.0, f)
        }
        CostKind::C2 { forbidden } => {
            let parts = rest
                .iter()
                .map(|&s| tape.overlap_sq(ComplexMatrix::column(forbidden), s))
                .collect::<Result<Vec<_>>>()?;
            if parts.is_empty() {
                return Ok(tape.constant(0.0));
            }
            tape.add_all(&parts)
        }
        CostKind::C3 { op } => {
            let mut parts = Vec::with_capacity(rest.len());
            for &s in rest {
                let os = tape.matmul(op.clone(), s)?;
                let z = tape.inner(s, os)?;
                parts.push(tape.real(z)?);
            }
            if parts.is_empty() {
                return Ok(tape.constant(0.0));
            }
            tape.add_all(&parts)
        }
        other => Err(Error::InvalidParameter(format!("{} is not a single-trajectory state cost", other.label()))),
    }
}

/// Readout costs from two ensembles of per-time signal traces
/// (`signals[i][m][t]`, `t = 0..N`) and per-trajectory initial/final
/// overlaps. Used for reporting; optimization goes through [`total_cost`].
pub fn eval_readout_costs(kind: &CostKind, traces: [&[Vec<f64>]; 2], overlaps: [&[f64]; 2], dt: f64) -> Result<f64> {
    if traces.iter().any(|t| t.is_empty()) && !matches!(kind, CostKind::Cq) {
        return Err(Error::Empty("readout ensemble"));
    }
    let n = traces[0].first().map_or(0, |t| t.len());
    if traces.iter().flat_map(|t| t.iter()).any(|t| t.len() != n) {
        return Err(Error::HorizonMismatch("signal traces of different length".into()));
    }
    let steps = n.saturating_sub(1);
    let duration = steps as f64 * dt;
    let mean_integral = |ens: &[Vec<f64>]| -> f64 {
        ens.iter().map(|t| t[..steps].iter().sum::<f64>() * dt).sum::<f64>() / ens.len() as f64
    };
    match kind {
        CostKind::Cf { .. } => {
            let d = (mean_integral(traces[0]) - mean_integral(traces[1])) / duration;
            Ok(-d * d)
        }
        CostKind::Cr { .. } => Ok((mean_integral(traces[0]) + mean_integral(traces[1])) / duration),
        CostKind::Cq => {
            if overlaps.iter().any(|o| o.is_empty()) {
                return Err(Error::Empty("readout ensemble"));
            }
            let m = overlaps.iter().map(|o| o.iter().sum::<f64>() / o.len() as f64).sum::<f64>() / 2.0;
            Ok(1.0 - m)
        }
        other => Err(Error::InvalidParameter(format!("{} is not a readout cost", other.label()))),
    }
}
