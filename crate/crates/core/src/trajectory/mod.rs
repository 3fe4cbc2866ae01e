// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Quantum-jump trajectories, clustered propagation and improved sampling.
//!
//! A jump consumes a whole time step: when the squared norm accumulated
//! since the last jump would fall to or below the drawn threshold `r` during
//! step `j`, the step's propagator is replaced by the jump operator applied
//! to the state at the start of the step.

pub mod rng;
mod sampling;
mod taped;

pub use sampling::{improved_sampling_batch, naive_batch, sample_ensemble, BatchConfig, BatchGradient, EnsembleSample};
pub use taped::{TapeContext, TapedTrajectory};

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, spmv, ComplexMatrix, StateBatch};
use crate::model::{apply_substeps, ControlPulse, OpenSystem};

/// One jump: the step it replaced, the channel, and the threshold that
/// triggered it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub step: usize,
    pub channel: usize,
    pub r: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub events: Vec<JumpEvent>,
}

impl JumpRecord {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(step, channel)` pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.events.iter().map(|e| (e.step, e.channel)).collect()
    }
}

/// Per-trajectory scalar statistics that cost functions are built from.
/// Sums run over the left-Riemann grid: states at time indices `0..N`.
#[derive(Clone, Debug)]
pub enum TrajectoryStat {
    /// `|⟨target|ψ_N⟩|²`
    FinalOverlap { target: Vec<C64> },
    /// `Σ_j |⟨state|ψ_j⟩|²`
    SumOverlap { state: Vec<C64> },
    /// `weight · Σ_j ⟨ψ_j|op|ψ_j⟩` for Hermitian `op`.
    SumExpectation { op: ComplexMatrix, weight: f64 },
}

/// What to keep from a simulated trajectory.
#[derive(Clone, Debug)]
pub struct SimOptions {
    /// Keep the state at every `store_stride`-th time index (0 keeps none).
    pub store_stride: usize,
    /// Hermitian operators whose expectation is recorded at every time index.
    pub observables: Vec<ComplexMatrix>,
    /// Taped trajectories switch to checkpoint-and-recompute when `d · N`
    /// exceeds this.
    pub checkpoint_budget: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { store_stride: 1, observables: Vec::new(), checkpoint_budget: 1 << 24 }
    }
}

/// Output of one trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryResult {
    pub state_stride: usize,
    /// Normalized states at time indices `0, stride, 2 stride, …`.
    pub states: Vec<Vec<C64>>,
    /// Squared norm accumulated since the last jump, at every time index
    /// (reset to 1 by a jump).
    pub norms: Vec<f64>,
    pub jumps: JumpRecord,
    /// `signals[o][t] = ⟨ψ_t|A_o|ψ_t⟩`.
    pub signals: Vec<Vec<f64>>,
    pub final_state: Vec<C64>,
    /// Per-trajectory statistics (taped trajectories only).
    pub stats: Vec<f64>,
    pub cost: f64,
    /// Flattened control-major `∂C/∂u` (taped trajectories only).
    pub gradient: Vec<f64>,
}

impl TrajectoryResult {
    /// Stored state at time index `t`, if kept.
    pub fn state_at(&self, t: usize) -> Option<&[C64]> {
        if self.state_stride == 0 || t % self.state_stride != 0 {
            return None;
        }
        self.states.get(t / self.state_stride).map(|v| v.as_slice())
    }

    /// Squared norm accumulated between consecutive jumps never increases.
    pub fn norms_monotone(&self, tol: f64) -> bool {
        let jump_steps: Vec<usize> = self.jumps.events.iter().map(|e| e.step).collect();
        self.norms.windows(2).enumerate().all(|(t, w)| jump_steps.contains(&t) || w[1] <= w[0] + tol)
    }
}

pub(crate) fn real_expectation(op: &ComplexMatrix, v: &[C64]) -> f64 {
    let mut av = vec![C64::new(0.0, 0.0); v.len()];
    op.apply(v, &mut av);
    v.iter().zip(&av).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Step generators for one pulse, shared by every trajectory.
#[derive(Clone, Debug)]
pub struct Propagator<'a> {
    sys: &'a OpenSystem,
    pulse: &'a ControlPulse,
    gens: Vec<(ComplexMatrix, usize)>,
}

impl<'a> Propagator<'a> {
    pub fn new(sys: &'a OpenSystem, pulse: &'a ControlPulse) -> Result<Self> {
        let gens = (0..pulse.steps()).map(|j| sys.step_generator(pulse, j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { sys, pulse, gens })
    }

    pub fn system(&self) -> &OpenSystem {
        self.sys
    }

    pub fn pulse(&self) -> &ControlPulse {
        self.pulse
    }

    pub fn steps(&self) -> usize {
        self.gens.len()
    }

    /// `exp(-i H_eff,j dt) V` for every column.
    pub fn no_jump(&self, j: usize, v: &StateBatch) -> Result<StateBatch> {
        let (a, s) = &self.gens[j];
        apply_substeps(a, *s, v, self.sys.settings.taylor)
    }
}

/// Channel weights `γ_l ‖c_l ψ‖²`.
pub(crate) fn channel_weights(sys: &OpenSystem, psi: &[C64]) -> Vec<f64> {
    let mut buf = vec![C64::new(0.0, 0.0); psi.len()];
    sys.channels()
        .iter()
        .map(|ch| {
            if ch.rate == 0.0 {
                return 0.0;
            }
            ch.op.apply(psi, &mut buf);
            ch.rate * norm2(&buf)
        })
        .collect()
}

/// Pick a channel with probability proportional to its weight, or `None`
/// when every weight vanishes.
pub(crate) fn choose_channel<R: Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let x = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (l, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = l;
            if x < acc {
                return Some(l);
            }
        }
    }
    Some(last)
}

/// Draw a threshold uniformly from `[floor, 1)`.
pub(crate) fn draw_threshold<R: Rng>(rng: &mut R, floor: f64) -> f64 {
    floor + (1.0 - floor) * rng.gen::<f64>()
}

/// Advance a batch by one step: columns with `None` share one exponential
/// action, columns with `Some(l)` get `c_l` applied. Output is unnormalized.
pub fn clustered_propagate(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    j: usize,
    batch: &StateBatch,
    mask: &[Option<usize>],
) -> Result<StateBatch> {
    if mask.len() != batch.width() {
        return Err(Error::DimensionMismatch(format!("mask of {} for width {}", mask.len(), batch.width())));
    }
    let (a, s) = sys.step_generator(pulse, j)?;
    cluster_step(sys, |v| apply_substeps(&a, s, v, sys.settings.taylor), batch, mask)
}

fn cluster_step(
    sys: &OpenSystem,
    no_jump: impl Fn(&StateBatch) -> Result<StateBatch>,
    batch: &StateBatch,
    mask: &[Option<usize>],
) -> Result<StateBatch> {
    let free: Vec<usize> = (0..batch.width()).filter(|&c| mask[c].is_none()).collect();
    let mut out = batch.clone();
    if !free.is_empty() {
        let sub = StateBatch::from_columns(&free.iter().map(|&c| batch.column(c)).collect::<Vec<_>>())?;
        let moved = no_jump(&sub)?;
        for (i, &c) in free.iter().enumerate() {
            out.column_mut(c).copy_from_slice(moved.column(i));
        }
    }
    for (c, m) in mask.iter().enumerate() {
        if let Some(l) = *m {
            let ch = sys.channels().get(l).ok_or(Error::IndexOutOfRange { index: l, len: sys.channels().len() })?;
            let moved = spmv(&ch.op, &StateBatch::from_vector(batch.column(c)))?;
            out.column_mut(c).copy_from_slice(moved.column(0));
        }
    }
    Ok(out)
}

struct ColumnState<R> {
    rng: Option<R>,
    r: f64,
    cum: f64,
    result: TrajectoryResult,
}

fn record_time(res: &mut TrajectoryResult, opts: &SimOptions, t: usize, psi: &[C64], cum: f64) {
    res.norms.push(cum);
    if opts.store_stride > 0 && t % opts.store_stride == 0 {
        res.states.push(psi.to_vec());
    }
    for (o, op) in opts.observables.iter().enumerate() {
        res.signals[o].push(real_expectation(op, psi));
    }
}

/// Simulate several trajectories side by side. Column `c` uses `rngs[c]`
/// (or never jumps when `None`) with its first threshold drawn from
/// `[floors[c], 1)`.
pub fn simulate_cluster<R: Rng>(
    prop: &Propagator,
    psi0: &[C64],
    rngs: Vec<Option<R>>,
    floors: &[f64],
    opts: &SimOptions,
) -> Result<Vec<TrajectoryResult>> {
    let sys = prop.system();
    let n = prop.steps();
    let width = rngs.len();
    if width == 0 {
        return Err(Error::Empty("trajectory cluster"));
    }
    if psi0.len() != sys.dim() {
        return Err(Error::DimensionMismatch(format!("initial state of length {} for d = {}", psi0.len(), sys.dim())));
    }
    let mut cols: Vec<ColumnState<R>> = rngs
        .into_iter()
        .zip(floors)
        .map(|(mut rng, &floor)| {
            let r = rng.as_mut().map(|g| draw_threshold(g, floor)).unwrap_or(0.0);
            let mut result = TrajectoryResult {
                state_stride: opts.store_stride,
                signals: vec![Vec::with_capacity(n + 1); opts.observables.len()],
                norms: Vec::with_capacity(n + 1),
                ..Default::default()
            };
            record_time(&mut result, opts, 0, psi0, 1.0);
            ColumnState { rng, r, cum: 1.0, result }
        })
        .collect();
    let mut batch = StateBatch::from_columns(&vec![psi0.to_vec(); width])?;
    for j in 0..n {
        let cand = prop.no_jump(j, &batch)?;
        let mut mask = vec![None; width];
        let mut cand_norms = vec![0.0; width];
        for (c, col) in cols.iter_mut().enumerate() {
            let nrm = norm2(cand.column(c));
            cand_norms[c] = nrm;
            if col.cum * nrm <= col.r {
                let weights = channel_weights(sys, batch.column(c));
                let rng = col.rng.as_mut().ok_or(Error::StateAnnihilated { step: j })?;
                // No channel acts on the pre-step state: defer to the next step.
                if let Some(l) = choose_channel(&weights, rng) {
                    col.result.jumps.events.push(JumpEvent { step: j, channel: l, r: col.r });
                    mask[c] = Some(l);
                }
            }
        }
        let mut next = cand;
        if mask.iter().any(Option::is_some) {
            let jumped = cluster_step(sys, |v| Ok(v.clone()), &batch, &mask)?;
            for (c, m) in mask.iter().enumerate() {
                if m.is_some() {
                    next.column_mut(c).copy_from_slice(jumped.column(c));
                }
            }
        }
        for (c, col) in cols.iter_mut().enumerate() {
            let nrm = if mask[c].is_some() { norm2(next.column(c)) } else { cand_norms[c] };
            if !(nrm > 0.0) {
                return Err(Error::StateAnnihilated { step: j });
            }
            let inv = 1.0 / nrm.sqrt();
            next.column_mut(c).iter_mut().for_each(|z| *z *= inv);
            if mask[c].is_some() {
                col.cum = 1.0;
                let rng = col.rng.as_mut().expect("jumping column has a stream");
                col.r = draw_threshold(rng, 0.0);
            } else {
                col.cum *= nrm;
            }
            record_time(&mut col.result, opts, j + 1, next.column(c), col.cum);
        }
        batch = next;
    }
    Ok(cols
        .into_iter()
        .enumerate()
        .map(|(c, mut col)| {
            col.result.final_state = batch.column(c).to_vec();
            col.result
        })
        .collect())
}

/// One jump trajectory with its first threshold drawn from `[r_floor, 1)`.
pub fn simulate_jump_trajectory<R: Rng>(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    rng: R,
    r_floor: f64,
    opts: &SimOptions,
) -> Result<TrajectoryResult> {
    if !(0.0..1.0).contains(&r_floor) {
        return Err(Error::InvalidParameter(format!("r_floor must lie in [0, 1), got {r_floor}")));
    }
    let prop = Propagator::new(sys, pulse)?;
    Ok(simulate_cluster(&prop, psi0, vec![Some(rng)], &[r_floor], opts)?.remove(0))
}

/// The deterministic no-jump trajectory; `norms.last()` is the no-jump
/// probability `p`.
pub fn simulate_no_jump(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    opts: &SimOptions,
) -> Result<TrajectoryResult> {
    let prop = Propagator::new(sys, pulse)?;
    let none: Option<rand_chacha::ChaCha8Rng> = None;
    Ok(simulate_cluster(&prop, psi0, vec![none], &[0.0], opts)?.remove(0))
}

/// Run `m` independent trajectories, `cluster_width` at a time, using the
/// stream `(seed, purpose, iteration, member_index(ensemble, i))` for
/// trajectory `i`. Output order is the trajectory index regardless of the
/// pool size.
#[allow(clippy::too_many_arguments)]
pub fn run_trajectories(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    m: usize,
    cluster_width: usize,
    seed: u64,
    stream_key: (rng::Purpose, u64, u64),
    opts: &SimOptions,
    pool: Option<&ThreadPool>,
) -> Result<Vec<TrajectoryResult>> {
    if m == 0 {
        return Err(Error::Empty("trajectory count"));
    }
    let prop = Propagator::new(sys, pulse)?;
    let width = cluster_width.max(1);
    let chunks: Vec<(usize, usize)> = (0..m).step_by(width).map(|s| (s, (s + width).min(m))).collect();
    let (purpose, iteration, ensemble) = stream_key;
    let run = |&(s, e): &(usize, usize)| -> Result<Vec<TrajectoryResult>> {
        let rngs = (s..e)
            .map(|i| Some(rng::stream(seed, purpose, iteration, rng::member_index(ensemble, i as u64))))
            .collect();
        simulate_cluster(&prop, psi0, rngs, &vec![0.0; e - s], opts)
    };
    let parts: Vec<Result<Vec<TrajectoryResult>>> = match pool {
        Some(p) => p.install(|| chunks.par_iter().map(run).collect()),
        None => chunks.iter().map(run).collect(),
    };
    let mut out = Vec::with_capacity(m);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Mean of `⟨ψ|A|ψ⟩` at time index `t` and its standard error (infinite
/// for a single trajectory).
pub fn expectation_estimate(results: &[TrajectoryResult], a: &ComplexMatrix, t: usize) -> Result<(f64, f64)> {
    if results.is_empty() {
        return Err(Error::Empty("trajectory results"));
    }
    let values = results
        .iter()
        .map(|r| {
            let psi = r.state_at(t).ok_or_else(|| Error::MissingParameter(format!("state at time index {t}")))?;
            if psi.len() != a.rows() {
                return Err(Error::DimensionMismatch("observable and state dimensions".into()));
            }
            Ok(real_expectation(a, psi))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_and_se(&values))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::operators::{destroy, number, quadrature_x};
    use crate::model::{step_propagate, Channel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit(gamma: f64) -> OpenSystem {
        OpenSystem::new(number(2), vec![quadrature_x(&destroy(2))], vec![Channel { op: destroy(2), rate: gamma }])
            .unwrap()
    }

    fn e() -> Vec<C64> {
        vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
    }

    /// Deterministic generator whose first f64 draw is 0.5.
    struct Fixed(Vec<f64>);
    impl rand::RngCore for Fixed {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            // rand's f64 sampling uses the top 53 bits.
            let x = self.0.remove(0);
            ((x * (1u64 << 53) as f64) as u64) << 11
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.iter_mut().for_each(|b| *b = 0);
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    #[test]
    fn closed_system_never_jumps() {
        let sys = qubit(0.0);
        let pulse = ControlPulse::new(0.05, vec![vec![0.4; 40]]).unwrap();
        let res =
            simulate_jump_trajectory(&sys, &pulse, &e(), ChaCha8Rng::seed_from_u64(1), 0.0, &SimOptions::default())
                .unwrap();
        assert!(res.jumps.is_empty());
        assert!((res.norms.last().unwrap() - 1.0).abs() < 1e-10);
        let nj = simulate_no_jump(&sys, &pulse, &e(), &SimOptions::default()).unwrap();
        for (a, b) in res.final_state.iter().zip(&nj.final_state) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn decay_jump_time_matches_threshold() {
        let sys = qubit(1.0);
        let dt = 0.01;
        let pulse = ControlPulse::zeros(1, 200, dt).unwrap();
        let res = simulate_jump_trajectory(&sys, &pulse, &e(), Fixed(vec![0.5, 0.3, 0.9]), 0.0, &SimOptions::default())
            .unwrap();
        assert_eq!(res.jumps.len(), 1);
        let t_jump = (res.jumps.events[0].step + 1) as f64 * dt;
        assert!((t_jump - std::f64::consts::LN_2).abs() <= dt);
        assert!((res.final_state[0].norm() - 1.0).abs() < 1e-12);
        assert!(res.norms_monotone(1e-12));
    }

    #[test]
    fn no_jump_probability_is_exponential() {
        let g = 0.3;
        let sys = qubit(g);
        let pulse = ControlPulse::zeros(1, 50, 0.1).unwrap();
        let res = simulate_no_jump(&sys, &pulse, &e(), &SimOptions::default()).unwrap();
        assert!((res.norms.last().unwrap() - (-g * 5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn clustered_matches_per_column_steps() {
        let sys = qubit(0.2);
        let pulse = ControlPulse::new(0.1, vec![vec![0.7, -0.3]]).unwrap();
        let cols: Vec<Vec<C64>> = (0..8)
            .map(|c| {
                let th = c as f64 * 0.3;
                vec![C64::new(th.cos(), 0.0), C64::new(0.0, th.sin())]
            })
            .collect();
        let batch = StateBatch::from_columns(&cols).unwrap();
        let mask: Vec<Option<usize>> = (0..8).map(|c| if c % 3 == 0 { Some(0) } else { None }).collect();
        let out = clustered_propagate(&sys, &pulse, 1, &batch, &mask).unwrap();
        for c in 0..8 {
            let single = step_propagate(&sys, &pulse, 1, &StateBatch::from_vector(&cols[c]), mask[c]).unwrap();
            assert_eq!(out.column(c), single.column(0));
        }
        let all_none = clustered_propagate(&sys, &pulse, 1, &batch, &[None; 8]).unwrap();
        for c in 0..8 {
            let single = step_propagate(&sys, &pulse, 1, &StateBatch::from_vector(&cols[c]), None).unwrap();
            assert_eq!(all_none.column(c), single.column(0));
        }
        assert!(clustered_propagate(&sys, &pulse, 1, &batch, &[None; 3]).is_err());
    }

    #[test]
    fn expectation_of_identity_and_single_sample() {
        let sys = qubit(0.5);
        let pulse = ControlPulse::new(0.1, vec![vec![0.5; 10]]).unwrap();
        let res =
            run_trajectories(&sys, &pulse, &e(), 5, 2, 3, (rng::Purpose::Test, 0, 0), &SimOptions::default(), None)
                .unwrap();
        let (m, se) = expectation_estimate(&res, &ComplexMatrix::identity(2), 10).unwrap();
        assert!((m - 1.0).abs() < 1e-12 && se < 1e-12);
        let (_, se1) = expectation_estimate(&res[..1], &number(2), 10).unwrap();
        assert!(se1.is_infinite());
        assert!(expectation_estimate(&[], &number(2), 0).is_err());
    }

    #[test]
    fn cluster_width_does_not_change_results() {
        let sys = qubit(0.8);
        let pulse = ControlPulse::new(0.1, vec![vec![0.9; 20]]).unwrap();
        let key = (rng::Purpose::Test, 2, 1);
        let a = run_trajectories(&sys, &pulse, &e(), 7, 1, 9, key, &SimOptions::default(), None).unwrap();
        let b = run_trajectories(&sys, &pulse, &e(), 7, 4, 9, key, &SimOptions::default(), None).unwrap();
        assert_eq!(a, b);
    }
}
