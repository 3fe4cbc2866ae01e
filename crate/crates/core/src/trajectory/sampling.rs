// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Naive and improved batch sampling of taped trajectories.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use super::rng::{self, Purpose};
use super::taped::{Decider, TapeContext, TapedTrajectory};
use super::TrajectoryStat;
use crate::error::{Error, Result};
use crate::model::{ControlPulse, OpenSystem};

/// Jump probabilities below this are treated as zero.
const MIN_JUMP_PROBABILITY: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub m_tot: usize,
    #[serde(default = "default_cluster_width")]
    pub cluster_width: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub improved_sampling: bool,
}

fn default_cluster_width() -> usize {
    8
}

fn default_true() -> bool {
    true
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self { m_tot: 10, cluster_width: default_cluster_width(), seed: 0, improved_sampling: true }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_tot == 0 {
            return Err(Error::InvalidParameter("m_tot must be at least 1".into()));
        }
        if self.cluster_width == 0 {
            return Err(Error::InvalidParameter("cluster_width must be at least 1".into()));
        }
        Ok(())
    }
}

/// Number of conditioned jump trajectories for no-jump probability `p`.
pub(crate) fn jump_count(p: f64, m_tot: usize) -> usize {
    // The small offset keeps products like (1 - 0.9) * 10 from rounding up.
    ((1.0 - p) * m_tot as f64 - 1e-9).ceil().max(0.0) as usize
}

/// A weighted set of taped trajectories.
pub struct EnsembleSample {
    pub members: Vec<TapedTrajectory>,
    pub weights: Vec<f64>,
    /// No-jump probability (1 for naive sampling, where it is not computed).
    pub p: f64,
    /// Trajectories simulated.
    pub m_sim: usize,
}

impl EnsembleSample {
    /// Weighted mean of each trajectory statistic.
    pub fn mean_stats(&self) -> Vec<f64> {
        let n = self.members.first().map_or(0, |m| m.result.stats.len());
        let mut out = vec![0.0; n];
        for (m, w) in self.members.iter().zip(&self.weights) {
            for (o, s) in out.iter_mut().zip(&m.result.stats) {
                *o += w * s;
            }
        }
        out
    }

    /// Weighted sum of member gradients for stat seeds `seeds`. Members are
    /// reduced in index order whatever the pool size.
    pub fn backward(&self, ctx: TapeContext, seeds: &[f64], pool: Option<&ThreadPool>) -> Result<Vec<Vec<f64>>> {
        let each = |m: &TapedTrajectory| m.backward(ctx, seeds);
        let grads: Vec<Result<Vec<Vec<f64>>>> = match pool {
            Some(p) => p.install(|| self.members.par_iter().map(each).collect()),
            None => self.members.iter().map(each).collect(),
        };
        let mut total = vec![vec![0.0; ctx.pulse.steps()]; ctx.sys.controls().len()];
        for (g, w) in grads.into_iter().zip(&self.weights) {
            for (row, grow) in total.iter_mut().zip(g?) {
                for (t, x) in row.iter_mut().zip(grow) {
                    *t += w * x;
                }
            }
        }
        Ok(total)
    }
}

fn par_build<F>(count: usize, pool: Option<&ThreadPool>, f: F) -> Result<Vec<TapedTrajectory>>
where
    F: Fn(usize) -> Result<TapedTrajectory> + Sync + Send,
{
    let out: Vec<Result<TapedTrajectory>> = match pool {
        Some(p) => p.install(|| (0..count).into_par_iter().map(&f).collect()),
        None => (0..count).map(&f).collect(),
    };
    out.into_iter().collect()
}

/// Sample one batch. Trajectory `i` draws from the stream
/// `(seed, Jump, iteration, member_index(ensemble, i))`.
pub fn sample_ensemble(
    ctx: TapeContext,
    psi0: &[C64],
    cfg: &BatchConfig,
    iteration: u64,
    ensemble: u64,
    pool: Option<&ThreadPool>,
) -> Result<EnsembleSample> {
    cfg.validate()?;
    let stream = |i: usize| rng::stream(cfg.seed, Purpose::Jump, iteration, rng::member_index(ensemble, i as u64));
    if !cfg.improved_sampling {
        return naive(ctx, psi0, cfg, pool, &stream);
    }
    let no_jump = TapedTrajectory::simulate::<rand_chacha::ChaCha8Rng>(ctx, psi0, Decider::NoJump)?;
    let mut p = *no_jump.result.norms.last().expect("norms include t = 0");
    if ctx.sys.is_closed() || 1.0 - p < MIN_JUMP_PROBABILITY {
        p = 1.0;
    }
    if !(p > 0.0) {
        log::warn!("no-jump probability is zero; falling back to naive sampling");
        return naive(ctx, psi0, cfg, pool, &stream);
    }
    let m_j = jump_count(p, cfg.m_tot);
    let jumps =
        par_build(m_j, pool, |i| TapedTrajectory::simulate(ctx, psi0, Decider::Live { rng: stream(i), floor: p }))?;
    let mut members = Vec::with_capacity(m_j + 1);
    let mut weights = Vec::with_capacity(m_j + 1);
    members.push(no_jump);
    weights.push(p);
    for m in jumps {
        members.push(m);
        weights.push((1.0 - p) / m_j as f64);
    }
    Ok(EnsembleSample { members, weights, p, m_sim: m_j + 1 })
}

fn naive(
    ctx: TapeContext,
    psi0: &[C64],
    cfg: &BatchConfig,
    pool: Option<&ThreadPool>,
    stream: &(dyn Fn(usize) -> rand_chacha::ChaCha8Rng + Sync),
) -> Result<EnsembleSample> {
    let members = par_build(cfg.m_tot, pool, |i| {
        TapedTrajectory::simulate(ctx, psi0, Decider::Live { rng: stream(i), floor: 0.0 })
    })?;
    let w = 1.0 / cfg.m_tot as f64;
    Ok(EnsembleSample { weights: vec![w; cfg.m_tot], members, p: 1.0, m_sim: cfg.m_tot })
}

/// Gradient and cost of one batch for the state-transfer cost
/// `1 - |⟨ψ_T|ψ_N⟩|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradient {
    pub gradient: Vec<Vec<f64>>,
    pub cost: f64,
    pub p: f64,
    pub m_sim: usize,
}

fn transfer_batch(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    target: &[C64],
    cfg: &BatchConfig,
    iteration: u64,
    pool: Option<&ThreadPool>,
) -> Result<BatchGradient> {
    let stats = [TrajectoryStat::FinalOverlap { target: target.to_vec() }];
    let opts = super::SimOptions { store_stride: 0, ..Default::default() };
    let ctx = TapeContext { sys, pulse, stats: &stats, opts: &opts };
    let sample = sample_ensemble(ctx, psi0, cfg, iteration, 0, pool)?;
    let gradient = sample.backward(ctx, &[-1.0], pool)?;
    Ok(BatchGradient { gradient, cost: 1.0 - sample.mean_stats()[0], p: sample.p, m_sim: sample.m_sim })
}

/// Improved-sampling batch: the no-jump trajectory with weight `p` plus
/// `⌈(1-p) m_tot⌉` jump trajectories sharing weight `1-p`.
pub fn improved_sampling_batch(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    target: &[C64],
    cfg: &BatchConfig,
    iteration: u64,
    pool: Option<&ThreadPool>,
) -> Result<BatchGradient> {
    if !cfg.improved_sampling {
        return Err(Error::InvalidParameter("improved_sampling_batch needs improved-sampling set".into()));
    }
    transfer_batch(sys, pulse, psi0, target, cfg, iteration, pool)
}

/// `m_tot` independent trajectories with equal weights.
pub fn naive_batch(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    target: &[C64],
    cfg: &BatchConfig,
    iteration: u64,
    pool: Option<&ThreadPool>,
) -> Result<BatchGradient> {
    let cfg = BatchConfig { improved_sampling: false, ..*cfg };
    transfer_batch(sys, pulse, psi0, target, &cfg, iteration, pool)
}
