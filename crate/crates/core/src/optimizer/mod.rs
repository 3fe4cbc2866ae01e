// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Mini-batch gradient descent over control pulses.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::costs::{CostKind, CostSpec};
use crate::error::{Error, Result};
use crate::model::{ControlPulse, OpenSystem};
use crate::oracles::{lindblad_propagate, DensityMatrix};
use crate::trajectory::rng::{self, Purpose};
use crate::trajectory::{
    mean_and_se, run_trajectories, sample_ensemble, BatchConfig, SimOptions, TapeContext, TrajectoryStat,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-2, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment estimates for [`adam_step`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub iteration: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub config: AdamConfig,
}

impl OptimizerState {
    pub fn new(controls: usize, steps: usize, config: AdamConfig) -> Self {
        Self { iteration: 0, m: vec![vec![0.0; steps]; controls], v: vec![vec![0.0; steps]; controls], config }
    }
}

/// One bias-corrected ADAM update of `u` in place. With `β1 = β2 = 0` this
/// is plain gradient descent `u ← u - ε g`.
pub fn adam_step(state: &mut OptimizerState, u: &mut ControlPulse, g: &[Vec<f64>]) -> Result<()> {
    if g.len() != u.controls() || g.iter().any(|r| r.len() != u.steps()) || state.m.len() != g.len() {
        return Err(Error::DimensionMismatch("gradient, moments and pulse must share a shape".into()));
    }
    if g.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::GradientBlowup);
    }
    let AdamConfig { learning_rate: lr, beta1: b1, beta2: b2, eps } = state.config;
    state.iteration += 1;
    let plain = b1 == 0.0 && b2 == 0.0;
    let c1 = 1.0 - b1.powf(state.iteration as f64);
    let c2 = 1.0 - b2.powf(state.iteration as f64);
    for k in 0..g.len() {
        for j in 0..g[k].len() {
            let gj = g[k][j];
            let step = if plain {
                lr * gj
            } else {
                let m = b1 * state.m[k][j] + (1.0 - b1) * gj;
                let v = b2 * state.v[k][j] + (1.0 - b2) * gj * gj;
                state.m[k][j] = m;
                state.v[k][j] = v;
                lr * (m / c1) / ((v / c2).sqrt() + eps)
            };
            u.set(k, j, u.get(k, j) - step);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub max_iterations: usize,
    /// Stop once an independent evaluation batch reaches this fidelity.
    pub target_fidelity: Option<f64>,
    pub adam: AdamConfig,
    /// Hard clip `|u_kj| ≤ bound` after every update.
    pub amplitude_bound: Option<f64>,
    /// Trajectories in each stopping-rule evaluation.
    pub eval_trajectories: usize,
    /// Calls the checkpoint hook every this many iterations (0: never).
    pub checkpoint_every: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            target_fidelity: None,
            adam: AdamConfig::default(),
            amplitude_bound: None,
            eval_trajectories: 200,
            checkpoint_every: 0,
        }
    }
}

/// What to optimize: ensembles started from `initial_states` under `cost`.
/// `fidelity_target`, when set, defines the logged fidelity
/// `mean |⟨ψ_T|ψ_N⟩|²` of the first ensemble.
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    pub sys: &'a OpenSystem,
    pub initial_states: Vec<Vec<C64>>,
    pub cost: &'a CostSpec,
    pub fidelity_target: Option<Vec<C64>>,
}

impl Problem<'_> {
    /// Target of the first C1 term, if any.
    pub fn c1_target(cost: &CostSpec) -> Option<Vec<C64>> {
        cost.terms.iter().find_map(|t| match &t.kind {
            CostKind::C1 { target } => Some(target.clone()),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub total_cost: f64,
    pub term_costs: Vec<f64>,
    /// Training-batch fidelity estimate (NaN without a fidelity target).
    pub fidelity: f64,
    /// Mean no-jump probability over ensembles.
    pub p: f64,
    pub m_sim: usize,
    /// Kept out of result payloads so reruns compare byte for byte.
    #[serde(skip)]
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLog {
    pub records: Vec<IterationRecord>,
    /// Fidelity of the stopping-rule evaluation batch, if it ran.
    pub evaluated_fidelity: Option<(f64, f64)>,
    /// First iteration whose evaluation reached the target.
    pub converged_at: Option<usize>,
}

impl ConvergenceLog {
    pub fn push(&mut self, r: IterationRecord) {
        self.records.push(r);
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Gradient and diagnostics at one pulse.
pub struct BatchEvaluation {
    pub gradient: Vec<Vec<f64>>,
    pub record: IterationRecord,
}

/// Sample every ensemble at `iteration` and differentiate the total cost.
pub fn batch_gradient(
    problem: &Problem,
    pulse: &ControlPulse,
    batch: &BatchConfig,
    iteration: u64,
    pool: Option<&ThreadPool>,
) -> Result<BatchEvaluation> {
    let start = Instant::now();
    let layout = problem.cost.layout(&problem.initial_states, pulse.dt(), pulse.duration())?;
    let opts = SimOptions { store_stride: 0, ..Default::default() };
    // Ensemble 0 carries one extra statistic for the logged fidelity.
    let track = problem.fidelity_target.as_ref().map(|t| TrajectoryStat::FinalOverlap { target: t.clone() });
    let stats: Vec<Vec<TrajectoryStat>> = layout
        .stats
        .iter()
        .enumerate()
        .map(|(e, s)| {
            let mut s = s.clone();
            if e == 0 {
                s.extend(track.clone());
            }
            s
        })
        .collect();
    let mut samples = Vec::with_capacity(stats.len());
    let mut means = Vec::with_capacity(stats.len());
    let mut fidelity = f64::NAN;
    for (e, psi0) in problem.initial_states.iter().enumerate() {
        let ctx = TapeContext { sys: problem.sys, pulse, stats: &stats[e], opts: &opts };
        let sample = sample_ensemble(ctx, psi0, batch, iteration, e as u64, pool)?;
        let mut m = sample.mean_stats();
        if e == 0 && track.is_some() {
            fidelity = m.pop().expect("fidelity statistic");
        }
        means.push(m);
        samples.push(sample);
    }
    let value = problem.cost.evaluate(&layout, &means, pulse)?;
    let mut gradient = value.pulse_gradient.clone();
    for (e, sample) in samples.iter().enumerate() {
        let ctx = TapeContext { sys: problem.sys, pulse, stats: &stats[e], opts: &opts };
        let mut seeds = value.stat_seeds[e].clone();
        seeds.resize(stats[e].len(), 0.0);
        let g = sample.backward(ctx, &seeds, pool)?;
        for (row, grow) in gradient.iter_mut().zip(g) {
            for (x, y) in row.iter_mut().zip(grow) {
                *x += y;
            }
        }
    }
    let p = samples.iter().map(|s| s.p).sum::<f64>() / samples.len() as f64;
    let m_sim = samples.iter().map(|s| s.m_sim).sum();
    Ok(BatchEvaluation {
        gradient,
        record: IterationRecord {
            iteration: iteration as usize,
            total_cost: value.total,
            term_costs: value.terms,
            fidelity,
            p,
            m_sim,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Random initial pulse in `±10%` of `bound` (or `±0.1` unbounded).
pub fn initial_pulse(controls: usize, steps: usize, dt: f64, bound: Option<f64>, seed: u64) -> Result<ControlPulse> {
    let mut r = rng::stream(seed, Purpose::PulseInit, 0, 0);
    ControlPulse::random(controls, steps, dt, bound.unwrap_or(1.0), 0.1, &mut r)
}

/// Called after every update with the iteration's record, the new pulse and
/// the optimizer state.
pub type Hook<'h> = &'h mut dyn FnMut(&IterationRecord, &ControlPulse, &OptimizerState);

/// Optimize `pulse` in place.
pub fn optimize(
    problem: &Problem,
    mut pulse: ControlPulse,
    batch: &BatchConfig,
    cfg: &OptimizeConfig,
    pool: Option<&ThreadPool>,
    mut checkpoint: Option<Hook>,
) -> Result<(ControlPulse, ConvergenceLog)> {
    batch.validate()?;
    if pulse.controls() != problem.sys.controls().len() {
        return Err(Error::DimensionMismatch(format!(
            "pulse has {} controls, system {}",
            pulse.controls(),
            problem.sys.controls().len()
        )));
    }
    if let Some(b) = cfg.amplitude_bound {
        pulse.clip(b);
    }
    let mut state = OptimizerState::new(pulse.controls(), pulse.steps(), cfg.adam);
    let mut log = ConvergenceLog::default();
    let mut failures = 0;
    for it in 0..cfg.max_iterations {
        let eval = match batch_gradient(problem, &pulse, batch, it as u64, pool) {
            Ok(e) => e,
            Err(Error::TaylorDivergence { max_terms }) if failures < 3 => {
                // Retry with a fresh batch; a pulse that keeps diverging aborts.
                failures += 1;
                log::warn!("taylor series did not converge in {max_terms} terms at iteration {it}; resampling");
                continue;
            }
            Err(e) => return Err(e),
        };
        failures = 0;
        adam_step(&mut state, &mut pulse, &eval.gradient)?;
        if let Some(b) = cfg.amplitude_bound {
            pulse.clip(b);
        }
        if let Some(hook) = checkpoint.as_deref_mut() {
            if cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 {
                hook(&eval.record, &pulse, &state);
            }
        }
        let fid = eval.record.fidelity;
        log.push(eval.record);
        if let (Some(target), Some(psi_t)) = (cfg.target_fidelity, &problem.fidelity_target) {
            if fid >= target {
                let (m, se) = evaluate_pulse(
                    problem.sys,
                    &pulse,
                    &problem.initial_states[0],
                    psi_t,
                    cfg.eval_trajectories.max(1),
                    batch.seed ^ it as u64,
                    pool,
                )?;
                log.evaluated_fidelity = Some((m, se));
                if m >= target {
                    log.converged_at = Some(it);
                    break;
                }
            }
        }
    }
    Ok((pulse, log))
}

/// Trajectory estimate of `|⟨ψ_T|ψ_N⟩|²` and its standard error.
pub fn evaluate_pulse(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    target: &[C64],
    m: usize,
    seed: u64,
    pool: Option<&ThreadPool>,
) -> Result<(f64, f64)> {
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one evaluation trajectory".into()));
    }
    let opts = SimOptions { store_stride: 0, ..Default::default() };
    let res = run_trajectories(sys, pulse, psi0, m, 8, seed, (Purpose::Evaluation, 0, 0), &opts, pool)?;
    let f: Vec<f64> = res
        .iter()
        .map(|r| r.final_state.iter().zip(target).map(|(a, b)| b.conj() * a).sum::<C64>().norm_sqr())
        .collect();
    Ok(mean_and_se(&f))
}

/// Exact `⟨ψ_T|ρ_N|ψ_T⟩` from the master equation.
pub fn oracle_fidelity(sys: &OpenSystem, pulse: &ControlPulse, psi0: &[C64], target: &[C64]) -> Result<f64> {
    let rho = lindblad_propagate(sys, pulse, &DensityMatrix::pure(psi0)?)?;
    let last = rho.last().expect("at least the initial state");
    let proj = crate::linalg::ComplexMatrix::from_fn(target.len(), target.len(), |i, j| target[i] * target[j].conj());
    Ok(last.expectation(&proj).re)
}
