// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Jump trajectories recorded on an autodiff tape.
//!
//! Each step's Taylor series is recorded term by term, so the graph depends
//! on the jump decisions and on how many terms each step needed. Long
//! trajectories keep only checkpoint states and rebuild one segment tape at
//! a time during the reverse pass.

use num_complex::Complex64 as C64;
use rand::Rng;

use super::{
    channel_weights, choose_channel, draw_threshold, real_expectation, JumpEvent, Propagator, SimOptions,
    TrajectoryResult, TrajectoryStat,
};
use crate::autodiff::{NodeId, Tape, Value};
use crate::error::{Error, Result};
use crate::linalg::{norm2, ComplexMatrix, StateBatch};
use crate::model::{ControlPulse, OpenSystem};

/// Everything a taped trajectory needs besides its randomness.
#[derive(Clone, Copy, Debug)]
pub struct TapeContext<'a> {
    pub sys: &'a OpenSystem,
    pub pulse: &'a ControlPulse,
    pub stats: &'a [TrajectoryStat],
    pub opts: &'a SimOptions,
}

/// How jump decisions are made.
pub(crate) enum Decider<R> {
    /// Threshold `r = 0`: the deterministic no-jump trajectory.
    NoJump,
    /// First threshold drawn from `[floor, 1)`, later ones from `[0, 1)`.
    Live { rng: R, floor: f64 },
    /// Replay recorded events.
    Forced(Vec<JumpEvent>),
}

struct Stepper<R> {
    decider: Decider<R>,
    r: f64,
    cum: f64,
    events: Vec<JumpEvent>,
}

impl<R: Rng> Stepper<R> {
    fn new(mut decider: Decider<R>) -> Self {
        let (r, events) = match &mut decider {
            Decider::Live { rng, floor } => (draw_threshold(rng, *floor), Vec::new()),
            Decider::Forced(ev) => (0.0, ev.clone()),
            Decider::NoJump => (0.0, Vec::new()),
        };
        Self { decider, r, cum: 1.0, events }
    }

    fn forced_at(&self, j: usize) -> Option<usize> {
        match &self.decider {
            Decider::Forced(ev) => ev.iter().find(|e| e.step == j).map(|e| e.channel),
            _ => None,
        }
    }

    fn is_forced(&self) -> bool {
        matches!(self.decider, Decider::Forced(_))
    }

    /// Decide step `j` given the candidate's squared norm.
    fn decide(&mut self, sys: &OpenSystem, j: usize, psi: &[C64], cand_norm2: f64) -> Result<Option<usize>> {
        if let Some(l) = self.forced_at(j) {
            return Ok(Some(l));
        }
        if self.is_forced() || self.cum * cand_norm2 > self.r {
            return Ok(None);
        }
        match &mut self.decider {
            Decider::Live { rng, .. } => {
                let l = choose_channel(&channel_weights(sys, psi), rng);
                if let Some(l) = l {
                    self.events.push(JumpEvent { step: j, channel: l, r: self.r });
                }
                Ok(l)
            }
            _ => Err(Error::StateAnnihilated { step: j }),
        }
    }

    fn after(&mut self, jumped: bool, n2: f64) {
        if jumped {
            self.cum = 1.0;
            if let Decider::Live { rng, .. } = &mut self.decider {
                self.r = draw_threshold(rng, 0.0);
            }
        } else {
            self.cum *= n2;
        }
    }
}

/// Numeric bookkeeping shared by taped and untaped forward passes.
struct Recorder<'a> {
    ctx: TapeContext<'a>,
    result: TrajectoryResult,
    stat_values: Vec<f64>,
}

impl<'a> Recorder<'a> {
    fn new(ctx: TapeContext<'a>) -> Self {
        let n = ctx.pulse.steps();
        let result = TrajectoryResult {
            state_stride: ctx.opts.store_stride,
            signals: vec![Vec::with_capacity(n + 1); ctx.opts.observables.len()],
            norms: Vec::with_capacity(n + 1),
            ..Default::default()
        };
        Self { ctx, result, stat_values: vec![0.0; ctx.stats.len()] }
    }

    fn record(&mut self, t: usize, psi: &[C64], cum: f64) {
        let n = self.ctx.pulse.steps();
        self.result.norms.push(cum);
        if self.ctx.opts.store_stride > 0 && t % self.ctx.opts.store_stride == 0 {
            self.result.states.push(psi.to_vec());
        }
        for (o, op) in self.ctx.opts.observables.iter().enumerate() {
            self.result.signals[o].push(real_expectation(op, psi));
        }
        for (i, stat) in self.ctx.stats.iter().enumerate() {
            self.stat_values[i] += match stat {
                TrajectoryStat::FinalOverlap { target } if t == n => overlap_sq(target, psi),
                TrajectoryStat::SumOverlap { state } if t < n => overlap_sq(state, psi),
                TrajectoryStat::SumExpectation { op, weight } if t < n => weight * real_expectation(op, psi),
                _ => 0.0,
            };
        }
    }

    fn finish(mut self, psi: &[C64], events: Vec<JumpEvent>) -> TrajectoryResult {
        self.result.final_state = psi.to_vec();
        self.result.jumps.events = events;
        self.result.stats = self.stat_values;
        self.result
    }
}

fn overlap_sq(u: &[C64], v: &[C64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
}

struct Segment {
    tape: Tape,
    start_step: usize,
    /// `u_leaves[k][j - start_step]`
    u_leaves: Vec<Vec<NodeId>>,
    start: NodeId,
    end: NodeId,
    stat_nodes: Vec<Option<NodeId>>,
}

/// Record one Taylor exponential `exp(A) x` with the per-vector stop rule.
fn taped_exp(tape: &mut Tape, a: NodeId, x: NodeId, sys: &OpenSystem) -> Result<NodeId> {
    let opts = sys.settings.taylor;
    // A term can vanish on the current state while its derivative does not
    // (u = 0 acting on an eigenvector), so also require the norm bound.
    let an = match tape.value(a) {
        Value::Matrix(m) => m.norm_one(),
        Value::Scalar(z) => z.norm(),
    };
    let mut bound = 1.0;
    let mut term = x;
    let mut sum = x;
    for k in 1..=opts.max_terms {
        let at = tape.matmul(a, term)?;
        term = tape.scale(C64::new(1.0 / k as f64, 0.0), at)?;
        sum = tape.add(sum, term)?;
        bound *= an / k as f64;
        let tn = norm2(&tape.value(term).to_vec());
        let sn = norm2(&tape.value(sum).to_vec());
        if tn <= opts.tol * opts.tol * sn && bound <= opts.tol {
            return Ok(sum);
        }
    }
    Err(Error::TaylorDivergence { max_terms: opts.max_terms })
}

fn record_sum_stats(tape: &mut Tape, stats: &[TrajectoryStat], psi: NodeId, acc: &mut [Vec<NodeId>]) -> Result<()> {
    for (i, stat) in stats.iter().enumerate() {
        let node = match stat {
            TrajectoryStat::SumOverlap { state } => tape.overlap_sq(ComplexMatrix::column(state), psi)?,
            TrajectoryStat::SumExpectation { op, weight } => {
                let av = tape.matmul(op.clone(), psi)?;
                let z = tape.inner(psi, av)?;
                let r = tape.real(z)?;
                tape.scale(C64::new(*weight, 0.0), r)?
            }
            TrajectoryStat::FinalOverlap { .. } => continue,
        };
        acc[i].push(node);
    }
    Ok(())
}

fn jump_node(tape: &mut Tape, sys: &OpenSystem, l: usize, psi: NodeId) -> Result<NodeId> {
    let ch = sys.channels().get(l).ok_or(Error::IndexOutOfRange { index: l, len: sys.channels().len() })?;
    tape.matmul(ch.op.clone(), psi)
}

/// Build the tape for steps `start..end` starting from `psi_start`.
fn build_segment<R: Rng>(
    ctx: TapeContext,
    start_step: usize,
    end_step: usize,
    psi_start: &[C64],
    stepper: &mut Stepper<R>,
    mut recorder: Option<&mut Recorder>,
) -> Result<Segment> {
    let sys = ctx.sys;
    let pulse = ctx.pulse;
    let n = pulse.steps();
    let mut tape = Tape::new();
    let start = if start_step == 0 {
        tape.constant(ComplexMatrix::column(psi_start))
    } else {
        tape.leaf_complex(ComplexMatrix::column(psi_start))
    };
    let mut u_leaves = vec![Vec::with_capacity(end_step - start_step); sys.controls().len()];
    let mut sums: Vec<Vec<NodeId>> = vec![Vec::new(); ctx.stats.len()];
    let mut psi = start;
    if let Some(rec) = recorder.as_deref_mut() {
        if start_step == 0 {
            rec.record(0, psi_start, 1.0);
        }
    }
    for j in start_step..end_step {
        record_sum_stats(&mut tape, ctx.stats, psi, &mut sums)?;
        let (_, s) = sys.step_generator(pulse, j)?;
        let factor = C64::new(0.0, -pulse.dt() / s as f64);
        let mut a = tape.constant(sys.h_eff0().scale(factor));
        for (k, hk) in sys.controls().iter().enumerate() {
            let u = tape.leaf_real(pulse.get(k, j));
            u_leaves[k].push(u);
            let term = tape.mul(u, hk.scale(factor))?;
            a = tape.add(a, term)?;
        }
        let psi_vals = tape.value(psi).to_vec();
        let (raw, jumped) = match stepper.forced_at(j) {
            Some(l) => (jump_node(&mut tape, sys, l, psi)?, true),
            None => {
                let mut cand = psi;
                for _ in 0..s {
                    cand = taped_exp(&mut tape, a, cand, sys)?;
                }
                let n2 = norm2(&tape.value(cand).to_vec());
                match stepper.decide(sys, j, &psi_vals, n2)? {
                    Some(l) => (jump_node(&mut tape, sys, l, psi)?, true),
                    None => (cand, false),
                }
            }
        };
        let n2 = norm2(&tape.value(raw).to_vec());
        if !(n2 > 0.0) {
            return Err(Error::StateAnnihilated { step: j });
        }
        psi = tape.normalize(raw)?;
        stepper.after(jumped, n2);
        if let Some(rec) = recorder.as_deref_mut() {
            rec.record(j + 1, &tape.value(psi).to_vec(), stepper.cum);
        }
    }
    if end_step == n {
        for (i, stat) in ctx.stats.iter().enumerate() {
            if let TrajectoryStat::FinalOverlap { target } = stat {
                let node = tape.overlap_sq(ComplexMatrix::column(target), psi)?;
                sums[i].push(node);
            }
        }
    }
    let stat_nodes = sums
        .iter()
        .map(|nodes| if nodes.is_empty() { Ok(None) } else { tape.add_all(nodes).map(Some) })
        .collect::<Result<Vec<_>>>()?;
    Ok(Segment { tape, start_step, u_leaves, start, end: psi, stat_nodes })
}

enum Storage {
    Full(Segment),
    /// Segment start states every `stride` steps.
    Checkpoints {
        stride: usize,
        states: Vec<Vec<C64>>,
    },
}

/// A simulated trajectory ready for a reverse pass.
pub struct TapedTrajectory {
    pub result: TrajectoryResult,
    storage: Storage,
}

impl TapedTrajectory {
    pub(crate) fn simulate<R: Rng>(ctx: TapeContext, psi0: &[C64], decider: Decider<R>) -> Result<Self> {
        let sys = ctx.sys;
        let n = ctx.pulse.steps();
        if psi0.len() != sys.dim() {
            return Err(Error::DimensionMismatch(format!(
                "initial state of length {} for d = {}",
                psi0.len(),
                sys.dim()
            )));
        }
        let mut stepper = Stepper::new(decider);
        let mut rec = Recorder::new(ctx);
        if sys.dim() * n <= ctx.opts.checkpoint_budget {
            let seg = build_segment(ctx, 0, n, psi0, &mut stepper, Some(&mut rec))?;
            let psi_n = seg.tape.value(seg.end).to_vec();
            let result = rec.finish(&psi_n, stepper.events);
            return Ok(Self { result, storage: Storage::Full(seg) });
        }
        let stride = ((n as f64).sqrt().ceil() as usize).max(1);
        let prop = Propagator::new(sys, ctx.pulse)?;
        let mut states = Vec::with_capacity(n / stride + 1);
        let mut psi = psi0.to_vec();
        rec.record(0, &psi, 1.0);
        for j in 0..n {
            if j % stride == 0 {
                states.push(psi.clone());
            }
            let (raw, jumped) = match stepper.forced_at(j) {
                Some(l) => (apply_channel(sys, l, &psi)?, true),
                None => {
                    let cand = prop.no_jump(j, &StateBatch::from_vector(&psi))?.into_columns().remove(0);
                    match stepper.decide(sys, j, &psi, norm2(&cand))? {
                        Some(l) => (apply_channel(sys, l, &psi)?, true),
                        None => (cand, false),
                    }
                }
            };
            let n2 = norm2(&raw);
            if !(n2 > 0.0) {
                return Err(Error::StateAnnihilated { step: j });
            }
            let inv = 1.0 / n2.sqrt();
            psi = raw.iter().map(|z| z * inv).collect();
            stepper.after(jumped, n2);
            rec.record(j + 1, &psi, stepper.cum);
        }
        let result = rec.finish(&psi, stepper.events);
        Ok(Self { result, storage: Storage::Checkpoints { stride, states } })
    }

    /// True when the trajectory keeps checkpoints instead of a full tape.
    pub fn is_checkpointed(&self) -> bool {
        matches!(self.storage, Storage::Checkpoints { .. })
    }

    /// Gradient of `Σ_i seeds[i] · stats[i]` with respect to the pulse,
    /// shaped `[control][step]`.
    pub fn backward(&self, ctx: TapeContext, seeds: &[f64]) -> Result<Vec<Vec<f64>>> {
        if seeds.len() != ctx.stats.len() {
            return Err(Error::DimensionMismatch(format!("{} seeds for {} statistics", seeds.len(), ctx.stats.len())));
        }
        let n = ctx.pulse.steps();
        let mut grad = vec![vec![0.0; n]; ctx.sys.controls().len()];
        match &self.storage {
            Storage::Full(seg) => {
                segment_backward(seg, seeds, None, &mut grad)?;
            }
            Storage::Checkpoints { stride, states } => {
                let mut carry: Option<Vec<C64>> = None;
                for (s, start_state) in states.iter().enumerate().rev() {
                    let start = s * stride;
                    let end = (start + stride).min(n);
                    let mut stepper: Stepper<rand_chacha::ChaCha8Rng> =
                        Stepper::new(Decider::Forced(self.result.jumps.events.clone()));
                    let seg = build_segment(ctx, start, end, start_state, &mut stepper, None)?;
                    carry = segment_backward(&seg, seeds, carry, &mut grad)?;
                }
            }
        }
        Ok(grad)
    }
}

fn apply_channel(sys: &OpenSystem, l: usize, psi: &[C64]) -> Result<Vec<C64>> {
    let ch = sys.channels().get(l).ok_or(Error::IndexOutOfRange { index: l, len: sys.channels().len() })?;
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    ch.op.apply(psi, &mut out);
    Ok(out)
}

/// Reverse pass over one segment; returns the adjoint of its start state.
fn segment_backward(
    seg: &Segment,
    seeds: &[f64],
    end_adjoint: Option<Vec<C64>>,
    grad: &mut [Vec<f64>],
) -> Result<Option<Vec<C64>>> {
    let mut all: Vec<(NodeId, Vec<C64>)> =
        seg.stat_nodes.iter().zip(seeds).filter_map(|(node, &s)| node.map(|id| (id, vec![C64::new(s, 0.0)]))).collect();
    if let Some(adj) = end_adjoint {
        all.push((seg.end, adj));
    }
    let g = seg.tape.backward_seeded(&all)?;
    for (k, leaves) in seg.u_leaves.iter().enumerate() {
        for (off, &leaf) in leaves.iter().enumerate() {
            grad[k][seg.start_step + off] = g.real(leaf);
        }
    }
    Ok(if seg.start_step == 0 { None } else { g.get(seg.start).map(|v| v.to_vec()) })
}
