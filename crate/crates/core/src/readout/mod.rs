// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Homodyne readout: diffusive trajectories, linear filtering and
//! threshold classification.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, ComplexMatrix};
use crate::model::{
    build_system, effective_hamiltonian, ControlPulse, JcFrame, JcReadoutParams, OpenSystem, SystemSpec,
};
use crate::oracles::steady_state;
use crate::trajectory::rng::{self, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusiveOptions {
    /// SDE steps per pulse step; `None` sizes each SDE step from the
    /// current state.
    pub substeps: Option<usize>,
    /// Target for `h ‖H_eff ψ‖` when choosing substeps.
    pub step_norm_target: f64,
    /// Largest tolerated excess norm of the deterministic Euler step,
    /// `h² ‖H_eff ψ‖²`.
    pub drift_bound: f64,
    /// Keep the state at every pulse step.
    pub store_states: bool,
}

impl Default for DiffusiveOptions {
    fn default() -> Self {
        Self { substeps: None, step_norm_target: 0.02, drift_bound: 1e-3, store_states: false }
    }
}

/// One homodyne trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusiveTrajectory {
    /// States at pulse-step boundaries `0..=N` (empty unless requested).
    pub states: Vec<Vec<C64>>,
    /// `s_j = ⟨ψ_j|S|ψ_j⟩` at `t_j = j dt`, `j = 0..N`.
    pub signal: Vec<f64>,
    /// Wiener increment accumulated over each pulse step, `[channel][step]`.
    pub wiener: Vec<Vec<f64>>,
    pub final_state: Vec<C64>,
}

struct SdeParts<'a> {
    /// `-i H_eff` for the current pulse step.
    drift: ComplexMatrix,
    channels: &'a [crate::model::Channel],
}

impl SdeParts<'_> {
    /// One Euler–Maruyama step of the renormalized linear SSE
    /// `dψ = [-i H_eff dt + Σ_l c_l (γ_l ⟨c_l + c_l†⟩ dt + √γ_l dW_l)] ψ`.
    /// Returns the new (unnormalized) state and `h² ‖H_eff ψ‖²`.
    fn euler(&self, psi: &[C64], h: f64, dw: &[f64], buf: &mut [C64]) -> (Vec<C64>, f64) {
        let n2 = norm2(psi);
        let mut out = psi.to_vec();
        self.drift.apply(psi, buf);
        let excess = h * h * norm2(buf);
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o += b * h;
        }
        for (ch, &w) in self.channels.iter().zip(dw) {
            if ch.rate == 0.0 {
                continue;
            }
            ch.op.apply(psi, buf);
            let x = 2.0 * psi.iter().zip(buf.iter()).map(|(p, c)| p.conj() * c).sum::<C64>().re / n2;
            let coef = ch.rate * x * h + ch.rate.sqrt() * w;
            for (o, b) in out.iter_mut().zip(buf.iter()) {
                *o += b * coef;
            }
        }
        (out, excess / n2)
    }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn expectation(op: &ComplexMatrix, psi: &[C64], buf: &mut [C64]) -> f64 {
    op.apply(psi, buf);
    psi.iter().zip(buf.iter()).map(|(p, c)| (p.conj() * c).re).sum()
}

/// Integrate the homodyne SSE with Euler–Maruyama steps combined by
/// Richardson extrapolation: per SDE step, `2 · (two half steps) - (one
/// full step)` with the full-step increment equal to the sum of the two
/// half-step increments.
pub fn simulate_diffusive<R: Rng>(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    signal_op: &ComplexMatrix,
    rng: &mut R,
    opts: &DiffusiveOptions,
) -> Result<DiffusiveTrajectory> {
    let d = sys.dim();
    if psi0.len() != d || signal_op.shape() != (d, d) {
        return Err(Error::DimensionMismatch("state, signal operator and system dimensions differ".into()));
    }
    if (norm2(psi0) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("initial state must be normalized".into()));
    }
    if opts.substeps == Some(0) || !(opts.step_norm_target > 0.0) || !(opts.drift_bound > 0.0) {
        return Err(Error::InvalidParameter("diffusive step options must be positive".into()));
    }
    let n = pulse.steps();
    let l = sys.channels().len();
    let dt = pulse.dt();
    let mut psi = psi0.to_vec();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    let mut traj = DiffusiveTrajectory {
        states: Vec::new(),
        signal: Vec::with_capacity(n),
        wiener: vec![vec![0.0; n]; l],
        final_state: Vec::new(),
    };
    let mut dwa = vec![0.0; l];
    let mut dwb = vec![0.0; l];
    let mut dwf = vec![0.0; l];
    for j in 0..n {
        if opts.store_states {
            traj.states.push(psi.clone());
        }
        traj.signal.push(expectation(signal_op, &psi, &mut buf));
        let h_eff = effective_hamiltonian(sys, pulse, j)?;
        let parts = SdeParts { drift: h_eff.scale(C64::new(0.0, -1.0)), channels: sys.channels() };
        let mut remaining = dt;
        let mut fixed_left = opts.substeps;
        while remaining > 1e-12 * dt {
            // Adaptive mode re-picks the step from the current state so that
            // h |H_eff psi| stays near the target.
            let h = match fixed_left.as_mut() {
                Some(left) => {
                    let h = remaining / *left as f64;
                    *left -= 1;
                    h
                }
                None => {
                    parts.drift.apply(&psi, &mut buf);
                    let n = (remaining * norm2(&buf).sqrt() / opts.step_norm_target).ceil().max(1.0);
                    remaining / n
                }
            };
            remaining -= h;
            if fixed_left == Some(0) {
                remaining = 0.0;
            }
            let sd = (0.5 * h).sqrt();
            for c in 0..l {
                dwa[c] = sd * gauss(rng);
                dwb[c] = sd * gauss(rng);
                dwf[c] = dwa[c] + dwb[c];
                traj.wiener[c][j] += dwf[c];
            }
            let (full, drift) = parts.euler(&psi, h, &dwf, &mut buf);
            if drift > opts.drift_bound {
                return Err(Error::SdeStepTooCoarse { step: j, drift });
            }
            let (mid, _) = parts.euler(&psi, 0.5 * h, &dwa, &mut buf);
            let (half, _) = parts.euler(&mid, 0.5 * h, &dwb, &mut buf);
            let next: Vec<C64> = half.iter().zip(&full).map(|(a, b)| a * 2.0 - b).collect();
            let nn = norm2(&next);
            if !(nn > 0.0) || !nn.is_finite() {
                return Err(Error::NonFinite("diffusive state"));
            }
            let inv = 1.0 / nn.sqrt();
            psi = next.into_iter().map(|z| z * inv).collect();
        }
    }
    if opts.store_states {
        traj.states.push(psi.clone());
    }
    traj.final_state = psi;
    Ok(traj)
}

/// `m` diffusive trajectories; trajectory `i` uses the stream
/// `(seed, Diffusive, 0, member_index(ensemble, i))`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_diffusive_ensemble(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
    signal_op: &ComplexMatrix,
    m: usize,
    seed: u64,
    ensemble: u64,
    opts: &DiffusiveOptions,
    pool: Option<&ThreadPool>,
) -> Result<Vec<DiffusiveTrajectory>> {
    if m == 0 {
        return Err(Error::Empty("diffusive ensemble"));
    }
    let run = |i: usize| {
        let mut r = rng::stream(seed, Purpose::Diffusive, 0, rng::member_index(ensemble, i as u64));
        simulate_diffusive(sys, pulse, psi0, signal_op, &mut r, opts)
    };
    let out: Vec<Result<DiffusiveTrajectory>> = match pool {
        Some(p) => p.install(|| (0..m).into_par_iter().map(run).collect()),
        None => (0..m).map(run).collect(),
    };
    out.into_iter().collect()
}

/// Per-step filter weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterKernel {
    pub weights: Vec<f64>,
}

/// `S = Σ_j s_j K_j dt` (left Riemann sum).
pub fn integrate_filtered(signal: &[f64], kernel: &FilterKernel, dt: f64) -> Result<f64> {
    if signal.len() != kernel.weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "signal of {} samples, kernel of {}",
            signal.len(),
            kernel.weights.len()
        )));
    }
    Ok(signal.iter().zip(&kernel.weights).map(|(s, k)| s * k).sum::<f64>() * dt)
}

fn mean_trace(signals: &[&[f64]]) -> Vec<f64> {
    let n = signals[0].len();
    let mut m = vec![0.0; n];
    for s in signals {
        for (a, b) in m.iter_mut().zip(s.iter()) {
            *a += b;
        }
    }
    m.iter_mut().for_each(|x| *x /= signals.len() as f64);
    m
}

/// Mean-difference kernel `K = s̄_0 - s̄_1`, scaled to unit Euclidean norm.
pub fn build_filter(ensemble0: &[&[f64]], ensemble1: &[&[f64]]) -> Result<FilterKernel> {
    if ensemble0.is_empty() || ensemble1.is_empty() {
        return Err(Error::Empty("filter ensemble"));
    }
    let n = ensemble0[0].len();
    if ensemble0.iter().chain(ensemble1).any(|s| s.len() != n) {
        return Err(Error::HorizonMismatch("signals of different length".into()));
    }
    let m0 = mean_trace(ensemble0);
    let m1 = mean_trace(ensemble1);
    let k: Vec<f64> = m0.iter().zip(&m1).map(|(a, b)| a - b).collect();
    let scale = m0.iter().chain(&m1).fold(0.0f64, |m, x| m.max(x.abs()));
    let norm = k.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 1e-12 * scale.max(1e-300)) || !norm.is_finite() {
        return Err(Error::DegenerateFilter);
    }
    Ok(FilterKernel { weights: k.into_iter().map(|x| x / norm).collect() })
}

/// Threshold classifier outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierResult {
    pub threshold: f64,
    /// True when class 0 lies below the threshold.
    pub zero_below: bool,
    /// `1 - (p(0|1) + p(1|0)) / 2`
    pub fidelity: f64,
    pub p01: f64,
    pub p10: f64,
    pub samples0: Vec<f64>,
    pub samples1: Vec<f64>,
}

/// Threshold and orientation maximizing `|ECDF_0 - ECDF_1|` on `a` vs `b`.
fn best_threshold(a: &[f64], b: &[f64]) -> (f64, bool) {
    let mut pooled: Vec<(f64, usize)> = a.iter().map(|&x| (x, 0)).chain(b.iter().map(|&x| (x, 1))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ca, mut cb) = (0.0, 0.0);
    let mut best = (0.0f64, pooled[0].0 - 1.0, true);
    for i in 0..pooled.len() {
        if pooled[i].1 == 0 {
            ca += 1.0;
        } else {
            cb += 1.0;
        }
        let last_of_value = i + 1 == pooled.len() || pooled[i + 1].0 > pooled[i].0;
        if !last_of_value {
            continue;
        }
        let gap = ca / na - cb / nb;
        if gap.abs() > best.0 {
            let thr = if i + 1 < pooled.len() { 0.5 * (pooled[i].0 + pooled[i + 1].0) } else { pooled[i].0 + 1.0 };
            best = (gap.abs(), thr, gap > 0.0);
        }
    }
    (best.1, best.2)
}

/// Pick the threshold on the even-indexed samples of each class and count
/// errors on the odd-indexed ones. Classes with a single sample are used
/// for both.
pub fn classify(samples0: &[f64], samples1: &[f64]) -> Result<ClassifierResult> {
    if samples0.is_empty() || samples1.is_empty() {
        return Err(Error::Empty("classifier samples"));
    }
    if samples0.iter().chain(samples1).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("classifier samples"));
    }
    let split = |s: &[f64]| -> (Vec<f64>, Vec<f64>) {
        if s.len() < 2 {
            return (s.to_vec(), s.to_vec());
        }
        (s.iter().step_by(2).copied().collect(), s.iter().skip(1).step_by(2).copied().collect())
    };
    let (train0, test0) = split(samples0);
    let (train1, test1) = split(samples1);
    let (threshold, zero_below) = best_threshold(&train0, &train1);
    let says_zero = |x: f64| (x < threshold) == zero_below;
    let p10 = test0.iter().filter(|&&x| !says_zero(x)).count() as f64 / test0.len() as f64;
    let p01 = test1.iter().filter(|&&x| says_zero(x)).count() as f64 / test1.len() as f64;
    Ok(ClassifierResult {
        threshold,
        zero_below,
        fidelity: 1.0 - (p01 + p10) / 2.0,
        p01,
        p10,
        samples0: samples0.to_vec(),
        samples1: samples1.to_vec(),
    })
}

/// Add zero-mean Gaussian noise of variance `variance` to every sample.
pub fn add_noise<R: Rng>(x: &[f64], variance: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!("noise variance must be non-negative, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(x.to_vec());
    }
    let sd = variance.sqrt();
    Ok(x.iter().map(|v| v + sd * gauss(rng)).collect())
}

/// One-photon reference drive and signal power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonReference {
    /// Constant drive amplitude giving one steady-state photon (rad/ns).
    pub a_ph: f64,
    /// `|⟨a + a†⟩|²` maximized over quadrature phase at one photon.
    pub signal_power: f64,
}

impl PhotonReference {
    /// Amplitude `A_n = √n A_ph` for `n` steady-state photons in the linear
    /// regime.
    pub fn amplitude(&self, n: f64) -> f64 {
        self.a_ph * n.sqrt()
    }

    /// Noise variance for normalized power `P_n`.
    pub fn noise_variance(&self, p_n: f64) -> f64 {
        p_n * self.signal_power
    }
}

/// Steady-state calibration on a reduced copy of the readout model (at most
/// six resonator levels, rotating frame) driven weakly, rescaled to one
/// photon assuming a linear response.
pub fn photon_reference(params: &JcReadoutParams) -> Result<PhotonReference> {
    let reduced = JcReadoutParams {
        resonator_levels: params.resonator_levels.min(6),
        frame: JcFrame::Rotating,
        ..params.clone()
    };
    let sys = build_system(&SystemSpec::JcReadout(reduced.clone()))?;
    let kappa = reduced.kappa_per_us * 1e-3;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter("photon reference needs resonator loss".into()));
    }
    let eps = 0.02 * kappa;
    let rho = steady_state(&sys, &[eps])?;
    let (a, _) = reduced.ladder_ops();
    let n_ss = rho.expectation(&a.adjoint().matmul(&a)?).re;
    let alpha = rho.expectation(&a);
    if !(n_ss > 0.0) {
        return Err(Error::SingularOp("weak drive produced no photons".into()));
    }
    Ok(PhotonReference { a_ph: eps / n_ss.sqrt(), signal_power: 4.0 * alpha.norm_sqr() / n_ss })
}

/// Classifier fidelity at each normalized noise power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutEvaluation {
    pub noise_powers: Vec<f64>,
    pub filter: FilterKernel,
    pub results: Vec<ClassifierResult>,
}

/// Simulate `m` diffusive trajectories per qubit state, build the filter
/// from the noiseless even-indexed trajectories, then add noise of each
/// normalized power and classify.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_readout(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    initial: [&[C64]; 2],
    signal_op: &ComplexMatrix,
    reference: &PhotonReference,
    noise_powers: &[f64],
    m: usize,
    seed: u64,
    opts: &DiffusiveOptions,
    pool: Option<&ThreadPool>,
) -> Result<ReadoutEvaluation> {
    let ens: Vec<Vec<DiffusiveTrajectory>> = (0..2)
        .map(|c| simulate_diffusive_ensemble(sys, pulse, initial[c], signal_op, m, seed, c as u64, opts, pool))
        .collect::<Result<_>>()?;
    let train = |c: usize| -> Vec<&[f64]> { ens[c].iter().step_by(2).map(|t| t.signal.as_slice()).collect() };
    let filter = build_filter(&train(0), &train(1))?;
    let mut results = Vec::with_capacity(noise_powers.len());
    for (i, &p) in noise_powers.iter().enumerate() {
        let var = reference.noise_variance(p);
        let samples = (0..2)
            .map(|c| {
                ens[c]
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        let mut r = rng::stream(seed, Purpose::Noise, i as u64, rng::member_index(c as u64, k as u64));
                        integrate_filtered(&add_noise(&t.signal, var, &mut r)?, &filter, pulse.dt())
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        results.push(classify(&samples[0], &samples[1])?);
    }
    Ok(ReadoutEvaluation { noise_powers: noise_powers.to_vec(), filter, results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::StateBatch;
    use crate::model::operators::{destroy, number, quadrature_x};
    use crate::model::{step_propagate, Channel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn closed_system_follows_schrodinger() {
        let sys = OpenSystem::new(number(3), vec![quadrature_x(&destroy(3))], vec![]).unwrap();
        let pulse = ControlPulse::new(0.05, vec![(0..40).map(|j| (0.2 * j as f64).sin()).collect()]).unwrap();
        let psi0 = vec![c(1.0), c(0.0), c(0.0)];
        let opts = DiffusiveOptions { store_states: true, step_norm_target: 0.005, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tr = simulate_diffusive(&sys, &pulse, &psi0, &quadrature_x(&destroy(3)), &mut rng, &opts).unwrap();
        let mut psi = StateBatch::from_vector(&psi0);
        for j in 0..40 {
            psi = step_propagate(&sys, &pulse, j, &psi, None).unwrap();
        }
        let exact = psi.column(0);
        let err = tr.final_state.iter().zip(exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        assert_eq!(tr.signal.len(), 40);
        assert_eq!(tr.states.len(), 41);
        assert!(tr.states.iter().all(|s| (norm2(s) - 1.0).abs() < 1e-9));
    }

    #[test]
    fn coarse_steps_are_rejected() {
        let sys = OpenSystem::new(number(2).scale(c(50.0)), vec![quadrature_x(&destroy(2))], vec![]).unwrap();
        let pulse = ControlPulse::zeros(1, 2, 0.5).unwrap();
        let opts = DiffusiveOptions { substeps: Some(1), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = simulate_diffusive(&sys, &pulse, &[c(0.0), c(1.0)], &number(2), &mut rng, &opts);
        assert!(matches!(r, Err(Error::SdeStepTooCoarse { .. })));
    }

    #[test]
    fn wiener_increments_have_unit_rate_variance() {
        let sys =
            OpenSystem::new(number(2), vec![quadrature_x(&destroy(2))], vec![Channel { op: destroy(2), rate: 0.1 }])
                .unwrap();
        let pulse = ControlPulse::zeros(1, 2000, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tr =
            simulate_diffusive(&sys, &pulse, &[c(1.0), c(0.0)], &number(2), &mut rng, &DiffusiveOptions::default())
                .unwrap();
        let var = tr.wiener[0].iter().map(|w| w * w).sum::<f64>() / 2000.0;
        assert!((var / 0.01 - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn filtered_integrals() {
        let k1 = FilterKernel { weights: vec![1.0; 10] };
        assert!((integrate_filtered(&[0.3; 10], &k1, 0.1).unwrap() - 0.3).abs() < 1e-15);
        let k = FilterKernel { weights: vec![1.0, -1.0, 1.0, -1.0] };
        assert_eq!(integrate_filtered(&[1.0; 4], &k, 0.5).unwrap(), 0.0);
        assert!(integrate_filtered(&[1.0; 3], &k, 0.5).is_err());
        let n = 1000;
        let dt = 4.0 * std::f64::consts::PI / n as f64;
        let s: Vec<f64> = (0..n).map(|j| (j as f64 * dt).sin()).collect();
        let tf = n as f64 * dt;
        let v = integrate_filtered(&s, &FilterKernel { weights: s.clone() }, dt).unwrap();
        assert!((v - tf / 2.0).abs() < 10.0 * dt);
    }

    #[test]
    fn filter_cases() {
        let a = vec![1.0, 2.0, 3.0];
        assert!(matches!(build_filter(&[&a], &[&a]), Err(Error::DegenerateFilter)));
        let b = vec![0.5, 1.5, 2.5];
        let k = build_filter(&[&a], &[&b]).unwrap();
        let w = 1.0 / 3f64.sqrt();
        assert!(k.weights.iter().all(|x| (x - w).abs() < 1e-15));
    }

    #[test]
    fn classifier_cases() {
        let r = classify(&[0.0, 0.1, 0.2, 0.3], &[1.0, 1.1, 1.2, 1.3]).unwrap();
        assert_eq!(r.fidelity, 1.0);
        assert!(r.zero_below);
        let flipped = classify(&[1.0, 1.1, 1.2, 1.3], &[0.0, 0.1, 0.2, 0.3]).unwrap();
        assert_eq!(flipped.fidelity, 1.0);
        assert!(!flipped.zero_below);
        assert_eq!(r.fidelity, 1.0 - (r.p01 + r.p10) / 2.0);
        assert!(classify(&[], &[1.0]).is_err());
        let single = classify(&[0.0], &[1.0]).unwrap();
        assert_eq!(single.fidelity, 1.0);
    }

    #[test]
    fn noise_variance_and_zero_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![0.5; 10000];
        assert_eq!(add_noise(&x, 0.0, &mut rng).unwrap(), x);
        let y = add_noise(&x, 2.0, &mut rng).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        assert!((var / 2.0 - 1.0).abs() < 0.05);
        assert!(add_noise(&x, -1.0, &mut rng).is_err());
    }

    #[test]
    fn photon_reference_is_near_half_kappa() {
        let p = JcReadoutParams::default();
        let r = photon_reference(&p).unwrap();
        let kappa = p.kappa_per_us * 1e-3;
        // The dispersive shift detunes the resonator, so more drive is needed
        // than for the bare resonator.
        assert!(r.a_ph >= 0.5 * kappa * 0.999 && r.a_ph < 5.0 * kappa, "{r:?}");
        assert!(r.signal_power > 0.0 && r.signal_power <= 4.0 + 1e-9);
    }
}
