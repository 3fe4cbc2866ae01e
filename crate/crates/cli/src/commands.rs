// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! The four run commands. Each writes its tables into the output directory
//! and returns a summary for callers that drive the library directly.

use std::cell::RefCell;

use num_complex::Complex64 as C64;
use rayon::ThreadPool;
use serde::Serialize;

use jumpgrad::linalg::ComplexMatrix;
use jumpgrad::model::{hamiltonian_at_step, ControlPulse, OpenSystem};
use jumpgrad::optimizer::{batch_gradient, optimize, ConvergenceLog, OptimizerState, Problem};
use jumpgrad::oracles::{lindblad_propagate, DensityMatrix, Liouvillian};
use jumpgrad::readout::{evaluate_readout, photon_reference, ReadoutEvaluation};
use jumpgrad::trajectory::rng::Purpose;
use jumpgrad::trajectory::{mean_and_se, run_trajectories, simulate_no_jump, BatchConfig, SimOptions};

use crate::config::{default_observables, observable_label, resolve_operator, OperatorSpec, Resolved, RunConfig};
use crate::error::CliError;
use crate::persist::{cols, f, write_pulse, Header, Writer};

/// Largest dimension the density-matrix oracle is asked to handle.
const ORACLE_MAX_DIM: usize = 64;
/// Trajectories per chunk in `simulate`; part of the stream key, so it is
/// fixed rather than derived from the worker count.
const SIM_CHUNK: usize = 1000;

pub struct Context {
    pub cfg: RunConfig,
    pub pool: ThreadPool,
    pub writer: Writer,
}

impl Context {
    /// `workers == 0` lets rayon pick.
    pub fn new(cfg: RunConfig, workers: usize) -> Result<Self, CliError> {
        cfg.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
        let header = Header { config_sha256: cfg.hash(), seed: cfg.seed };
        let writer = Writer::new(&cfg.out_dir, header)?;
        Ok(Self { cfg, pool, writer })
    }
}

fn oracle_states(sys: &OpenSystem, pulse: &ControlPulse, psi0: &[C64]) -> Result<Option<Vec<DensityMatrix>>, CliError> {
    if sys.dim() > ORACLE_MAX_DIM {
        return Ok(None);
    }
    Ok(Some(lindblad_propagate(sys, pulse, &DensityMatrix::pure(psi0)?)?))
}

/// Evenly spread time indices in `1..=n`.
pub fn sample_times(n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n);
    let mut t: Vec<usize> = (1..=count).map(|i| (i * n).div_ceil(count)).collect();
    t.dedup();
    t
}

/// Smallest standard error an `m`-trajectory mean can claim for `op`. When
/// no sampled trajectory has jumped yet the sample variance is zero, but
/// events rarer than `1/m` can still shift the exact value by up to one
/// trajectory's worth of the spectral range.
fn resolution_floor(op: &ComplexMatrix, m: usize) -> f64 {
    let lo = jumpgrad::oracles::min_eigenvalue(op);
    let hi = -jumpgrad::oracles::min_eigenvalue(&op.scale(C64::new(-1.0, 0.0)));
    (hi - lo) / m as f64
}

fn deviation_sigma(mean: f64, se: f64, exact: f64) -> f64 {
    let dev = (mean - exact).abs();
    if se > 0.0 {
        dev / se
    } else if dev < 1e-9 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub trajectories: usize,
    pub comparisons: usize,
    pub oracle_available: bool,
    /// Largest `|trajectory mean - oracle| / standard error` over all
    /// observables, sampled times and initial states.
    pub max_deviation_sigma: f64,
    pub mean_jumps: Vec<f64>,
}

/// Jump-trajectory ensemble compared with the Lindblad oracle.
pub fn simulate(ctx: &Context) -> Result<SimulateSummary, CliError> {
    let cfg = &ctx.cfg;
    let r = cfg.resolve()?;
    let d = r.sys.dim();
    let specs = cfg.simulate.observables.clone().unwrap_or_else(|| default_observables(&cfg.system, d));
    let ops = specs.iter().map(|s| resolve_operator(s, &cfg.system, d)).collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<String> = specs.iter().map(observable_label).collect();
    let times = sample_times(r.pulse.steps(), cfg.simulate.sample_times);
    let opts = SimOptions { store_stride: 0, observables: ops.clone(), ..Default::default() };
    let m = cfg.simulate.trajectories;

    let mut rows = Vec::new();
    let mut dump_rows = Vec::new();
    let mut summary = SimulateSummary {
        trajectories: m,
        comparisons: 0,
        oracle_available: d <= ORACLE_MAX_DIM,
        max_deviation_sigma: 0.0,
        mean_jumps: Vec::new(),
    };
    for (e, psi0) in r.initial_states.iter().enumerate() {
        // values[o][ti][trajectory]
        let mut values = vec![vec![Vec::with_capacity(m); times.len()]; ops.len()];
        let mut jumps = 0usize;
        for (chunk, start) in (0..m).step_by(SIM_CHUNK).enumerate() {
            let len = SIM_CHUNK.min(m - start);
            let key = (Purpose::Simulate, chunk as u64, e as u64);
            let res = run_trajectories(
                &r.sys,
                &r.pulse,
                psi0,
                len,
                cfg.simulate.cluster_width,
                cfg.seed,
                key,
                &opts,
                Some(&ctx.pool),
            )?;
            for (i, tr) in res.iter().enumerate() {
                jumps += tr.jumps.len();
                for (o, sig) in tr.signals.iter().enumerate() {
                    for (ti, &t) in times.iter().enumerate() {
                        values[o][ti].push(sig[t]);
                    }
                }
                let index = start + i;
                if index < cfg.simulate.dump_trajectories {
                    for t in 0..=r.pulse.steps() {
                        let channel = tr.jumps.events.iter().find(|ev| ev.step + 1 == t).map(|ev| ev.channel as i64);
                        let mut row = vec![
                            e.to_string(),
                            index.to_string(),
                            t.to_string(),
                            f(t as f64 * r.pulse.dt()),
                            f(tr.norms[t]),
                            channel.unwrap_or(-1).to_string(),
                        ];
                        row.extend(tr.signals.iter().map(|s| f(s[t])));
                        dump_rows.push(row);
                    }
                }
            }
        }
        summary.mean_jumps.push(jumps as f64 / m as f64);
        let oracle = oracle_states(&r.sys, &r.pulse, psi0)?;
        let floors: Vec<f64> = ops.iter().map(|op| resolution_floor(op, m)).collect();
        for (o, op) in ops.iter().enumerate() {
            for (ti, &t) in times.iter().enumerate() {
                let (mean, se) = mean_and_se(&values[o][ti]);
                let exact = oracle.as_ref().map(|rho| rho[t].expectation(op).re);
                let sigma = exact.map(|x| deviation_sigma(mean, se.max(floors[o]), x));
                if let Some(s) = sigma {
                    summary.comparisons += 1;
                    summary.max_deviation_sigma = summary.max_deviation_sigma.max(s);
                }
                rows.push(vec![
                    e.to_string(),
                    t.to_string(),
                    f(t as f64 * r.pulse.dt()),
                    labels[o].clone(),
                    f(mean),
                    f(se),
                    exact.map(f).unwrap_or_default(),
                    sigma.map(f).unwrap_or_default(),
                ]);
            }
        }
    }
    let w = &ctx.writer;
    w.csv(
        "simulate.csv",
        &[("trajectories", m.to_string())],
        &cols(&[
            "ensemble",
            "step",
            "t_ns",
            "observable",
            "trajectory_mean",
            "trajectory_se",
            "oracle",
            "deviation_sigma",
        ]),
        &rows,
    )?;
    let mut dump_cols = cols(&["ensemble", "trajectory", "step", "t_ns", "norm", "jump_channel"]);
    dump_cols.extend(labels.iter().cloned());
    w.csv(
        "trajectories.csv",
        &[("jump_channel", "channel of a jump ending at this step, -1 if none".into())],
        &dump_cols,
        &dump_rows,
    )?;
    write_pulse(w, "pulse.csv", &r.pulse)?;
    w.json("simulate_summary.json", &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeSummary {
    pub iterations: usize,
    pub converged_at: Option<usize>,
    /// Independent-batch estimate (mean, standard error) at the stop.
    pub evaluated_fidelity: Option<(f64, f64)>,
    /// Exact fidelity of the final pulse from the master equation.
    pub oracle_fidelity: Option<f64>,
    pub final_batch_fidelity: f64,
    /// Largest `1 - p` seen over the run.
    pub max_jump_probability: f64,
}

pub struct OptimizeOutcome {
    pub pulse: ControlPulse,
    pub log: ConvergenceLog,
    pub summary: OptimizeSummary,
}

/// Per-step oracle populations of the first initial state.
fn write_occupation(
    w: &Writer,
    name: &str,
    sys: &OpenSystem,
    pulse: &ControlPulse,
    psi0: &[C64],
) -> Result<(), CliError> {
    let Some(rho) = oracle_states(sys, pulse, psi0)? else {
        return Ok(());
    };
    let d = sys.dim();
    let mut columns = cols(&["step", "t_ns"]);
    columns.extend((0..d).map(|k| format!("pop{k}")));
    let rows: Vec<Vec<String>> = rho
        .iter()
        .enumerate()
        .map(|(t, r)| {
            let mut row = vec![t.to_string(), f(t as f64 * pulse.dt())];
            row.extend((0..d).map(|k| f(r.matrix().get(k, k).re)));
            row
        })
        .collect();
    w.csv(name, &[], &columns, &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct Checkpoint<'a> {
    iteration: usize,
    pulse: &'a ControlPulse,
    optimizer: &'a OptimizerState,
}

pub fn optimize_run(ctx: &Context) -> Result<OptimizeOutcome, CliError> {
    let cfg = &ctx.cfg;
    let Resolved { sys, pulse, initial_states, cost, optimizer } = cfg.resolve()?;
    let cost = cost.ok_or_else(|| CliError::Config("optimize needs at least one cost term".into()))?;
    let problem = Problem {
        sys: &sys,
        initial_states: initial_states.clone(),
        cost: &cost,
        fidelity_target: Problem::c1_target(&cost),
    };
    let w = &ctx.writer;
    let ckpt_dir = w.dir.join("checkpoints");
    let hook_err: RefCell<Option<CliError>> = RefCell::new(None);
    let mut hook = |rec: &jumpgrad::optimizer::IterationRecord, p: &ControlPulse, s: &OptimizerState| {
        let res = std::fs::create_dir_all(&ckpt_dir).map_err(CliError::from).and_then(|_| {
            let c = Checkpoint { iteration: rec.iteration, pulse: p, optimizer: s };
            let text = serde_json::to_string(&c).expect("checkpoint serializes");
            std::fs::write(ckpt_dir.join(format!("ckpt_{:06}.json", rec.iteration)), text).map_err(CliError::from)
        });
        if let Err(e) = res {
            hook_err.borrow_mut().get_or_insert(e);
        }
    };
    let (pulse, log) = optimize(&problem, pulse, &cfg.batch, &optimizer, Some(&ctx.pool), Some(&mut hook))?;
    if let Some(e) = hook_err.into_inner() {
        return Err(e);
    }
    let oracle_fidelity = match &problem.fidelity_target {
        Some(t) if sys.dim() <= ORACLE_MAX_DIM => {
            Some(jumpgrad::optimizer::oracle_fidelity(&sys, &pulse, &initial_states[0], t)?)
        }
        _ => None,
    };
    let summary = OptimizeSummary {
        iterations: log.records.len(),
        converged_at: log.converged_at,
        evaluated_fidelity: log.evaluated_fidelity,
        oracle_fidelity,
        final_batch_fidelity: log.last().map(|r| r.fidelity).unwrap_or(f64::NAN),
        max_jump_probability: log.records.iter().map(|r| 1.0 - r.p).fold(0.0, f64::max),
    };

    write_pulse(w, "pulse.csv", &pulse)?;
    let mut columns = cols(&["iteration", "total_cost"]);
    columns.extend(cost.terms.iter().map(|t| format!("cost_{}", t.kind.label())));
    columns.extend(cols(&["fidelity", "no_jump_probability", "m_sim"]));
    let rows: Vec<Vec<String>> = log
        .records
        .iter()
        .map(|r| {
            let mut row = vec![r.iteration.to_string(), f(r.total_cost)];
            row.extend(r.term_costs.iter().map(|c| f(*c)));
            row.extend([f(r.fidelity), f(r.p), r.m_sim.to_string()]);
            row
        })
        .collect();
    w.csv("convergence.csv", &[], &columns, &rows)?;
    // Wall time varies between runs, so it stays out of the result tables.
    let timing: Vec<Vec<String>> =
        log.records.iter().map(|r| vec![r.iteration.to_string(), format!("{:.6}", r.wall_time_s)]).collect();
    w.csv("timing.csv", &[], &cols(&["iteration", "wall_time_s"]), &timing)?;
    write_occupation(w, "occupation.csv", &sys, &pulse, &initial_states[0])?;
    w.json("optimize_summary.json", &summary)?;
    Ok(OptimizeOutcome { pulse, log, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifySummary {
    pub a_ph: f64,
    pub signal_power: f64,
    pub signal_frame: &'static str,
    pub noise_powers: Vec<f64>,
    pub fidelities: Vec<f64>,
    /// Oracle `⟨a†a⟩(T_f)` per initial state.
    pub final_photons: Option<Vec<f64>>,
    /// Oracle transmon `⟨b†b⟩(T_f)` per initial state.
    pub final_qubit_number: Option<Vec<f64>>,
}

pub struct ClassifyOutcome {
    pub evaluation: ReadoutEvaluation,
    pub summary: ClassifySummary,
}

/// Final photon numbers and qubit excitations, one entry per initial state.
pub type Occupations = (Vec<f64>, Vec<f64>);

/// Oracle final photon number and qubit excitation for each initial state.
pub fn readout_occupations(
    cfg: &RunConfig,
    sys: &OpenSystem,
    pulse: &ControlPulse,
    states: &[Vec<C64>],
) -> Result<Option<Occupations>, CliError> {
    if sys.dim() > ORACLE_MAX_DIM {
        return Ok(None);
    }
    let n = resolve_operator(&OperatorSpec::Photons, &cfg.system, sys.dim())?;
    let q = resolve_operator(&OperatorSpec::QubitNumber, &cfg.system, sys.dim())?;
    let mut photons = Vec::new();
    let mut qubit = Vec::new();
    for psi in states {
        let rho = lindblad_propagate(sys, pulse, &DensityMatrix::pure(psi)?)?;
        let last = rho.last().expect("at least the initial state");
        photons.push(last.expectation(&n).re);
        qubit.push(last.expectation(&q).re);
    }
    Ok(Some((photons, qubit)))
}

/// Diffusive readout of both qubit states, filtering and threshold
/// classification over the configured noise powers.
pub fn classify(ctx: &Context) -> Result<ClassifyOutcome, CliError> {
    let cfg = &ctx.cfg;
    let params = cfg.readout_params().ok_or_else(|| CliError::Config("classify needs the jc-readout family".into()))?;
    let r = cfg.resolve()?;
    if r.initial_states.len() != 2 {
        return Err(CliError::Config("classify needs exactly two initial states".into()));
    }
    let reference = photon_reference(params)?;
    let signal = resolve_operator(&OperatorSpec::Quadrature, &cfg.system, r.sys.dim())?;
    let ro = &cfg.readout;
    let evaluation = evaluate_readout(
        &r.sys,
        &r.pulse,
        [&r.initial_states[0], &r.initial_states[1]],
        &signal,
        &reference,
        &ro.noise_powers,
        ro.trajectories_per_class,
        cfg.seed,
        &ro.diffusive,
        Some(&ctx.pool),
    )?;
    let occ = readout_occupations(cfg, &r.sys, &r.pulse, &r.initial_states)?;
    let summary = ClassifySummary {
        a_ph: reference.a_ph,
        signal_power: reference.signal_power,
        signal_frame: "rotating",
        noise_powers: ro.noise_powers.clone(),
        fidelities: evaluation.results.iter().map(|c| c.fidelity).collect(),
        final_photons: occ.as_ref().map(|o| o.0.clone()),
        final_qubit_number: occ.map(|o| o.1),
    };

    let w = &ctx.writer;
    let meta = [("signal_frame", "rotating".to_string()), ("a_ph_rad_per_ns", f(reference.a_ph))];
    let rows: Vec<Vec<String>> = evaluation
        .noise_powers
        .iter()
        .zip(&evaluation.results)
        .map(|(p, c)| vec![f(*p), f(c.threshold), f(c.fidelity), f(c.p01), f(c.p10)])
        .collect();
    w.csv("classify.csv", &meta, &cols(&["noise_power", "threshold", "fidelity", "p01", "p10"]), &rows)?;
    let mut samples = Vec::new();
    for (p, c) in evaluation.noise_powers.iter().zip(&evaluation.results) {
        for (class, s) in [&c.samples0, &c.samples1].into_iter().enumerate() {
            samples.extend(s.iter().enumerate().map(|(i, x)| vec![f(*p), class.to_string(), i.to_string(), f(*x)]));
        }
    }
    w.csv("samples.csv", &meta, &cols(&["noise_power", "class", "trajectory", "integrated_signal"]), &samples)?;
    let kernel: Vec<Vec<String>> = evaluation
        .filter
        .weights
        .iter()
        .enumerate()
        .map(|(j, k)| vec![j.to_string(), f(j as f64 * r.pulse.dt()), f(*k)])
        .collect();
    w.csv("filter.csv", &meta, &cols(&["step", "t_ns", "kernel"]), &kernel)?;
    write_pulse(w, "pulse.csv", &r.pulse)?;
    w.json("classify_summary.json", &summary)?;
    Ok(ClassifyOutcome { evaluation, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// Trajectory-vs-oracle smoke test size and its (multiple-comparison)
/// tolerance in standard errors.
const VALIDATE_TRAJECTORIES: usize = 2000;
const VALIDATE_SIGMA: f64 = 4.5;

/// Invariant and oracle checks on the configured system and pulse.
pub fn validate(ctx: &Context) -> Result<Vec<Check>, CliError> {
    let cfg = &ctx.cfg;
    let r = cfg.resolve()?;
    let (sys, pulse) = (&r.sys, &r.pulse);
    let d = sys.dim();
    let mut checks = Vec::new();

    let herm = (0..pulse.steps())
        .map(|j| hamiltonian_at_step(sys, pulse, j).map(|h| h.hermiticity_error()))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::below("hamiltonian_hermiticity", herm, 1e-12));

    let nj = simulate_no_jump(sys, pulse, &r.initial_states[0], &SimOptions { store_stride: 0, ..Default::default() })?;
    let rise = nj.norms.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    checks.push(Check::below("no_jump_norm_increase", rise, 1e-12));

    if d <= ORACLE_MAX_DIM {
        let liou = Liouvillian::new(sys)?;
        let defect = (0..pulse.steps())
            .map(|j| liou.trace_defect(pulse, j))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::below("liouvillian_trace_defect", defect, 1e-10));

        let rho = oracle_states(sys, pulse, &r.initial_states[0])?.expect("oracle in range");
        let last = rho.last().expect("final state");
        checks.push(Check::below("oracle_final_trace_error", (last.matrix().trace().re - 1.0).abs(), 1e-8));
        let min_eig = jumpgrad::oracles::min_eigenvalue(last.matrix());
        checks.push(Check::below("oracle_final_negativity", (-min_eig).max(0.0), 1e-8));

        let ops: Vec<ComplexMatrix> = (0..d).map(|k| jumpgrad::model::operators::projector(d, k)).collect();
        let opts = SimOptions { store_stride: 0, observables: ops.clone(), ..Default::default() };
        let res = run_trajectories(
            sys,
            pulse,
            &r.initial_states[0],
            VALIDATE_TRAJECTORIES,
            8,
            cfg.seed,
            (Purpose::Test, 0, 0),
            &opts,
            Some(&ctx.pool),
        )?;
        let mut worst: f64 = 0.0;
        let floor = resolution_floor(&ops[0], VALIDATE_TRAJECTORIES);
        for t in sample_times(pulse.steps(), 5) {
            for (o, op) in ops.iter().enumerate() {
                let v: Vec<f64> = res.iter().map(|tr| tr.signals[o][t]).collect();
                let (mean, se) = mean_and_se(&v);
                worst = worst.max(deviation_sigma(mean, se.max(floor), rho[t].expectation(op).re));
            }
        }
        checks.push(Check::below("trajectory_vs_oracle_sigma", worst, VALIDATE_SIGMA));
    }

    if let (Some(cost), true) = (&r.cost, d <= 8) {
        checks.push(gradient_check(sys, pulse, &r.initial_states, cost, cfg.seed)?);
    }

    let rows: Vec<Vec<String>> =
        checks.iter().map(|c| vec![c.name.clone(), f(c.value), f(c.tolerance), c.passed.to_string()]).collect();
    ctx.writer.csv("validate.csv", &[], &cols(&["check", "value", "tolerance", "passed"]), &rows)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::Validation(failed.join(", ")));
    }
    Ok(checks)
}

/// Central finite differences of the naive-sampling batch cost on a few
/// pulse entries, against the taped gradient. Fixed streams make the cost a
/// smooth function of the pulse away from jump-time boundaries.
fn gradient_check(
    sys: &OpenSystem,
    pulse: &ControlPulse,
    states: &[Vec<C64>],
    cost: &jumpgrad::costs::CostSpec,
    seed: u64,
) -> Result<Check, CliError> {
    let problem = Problem { sys, initial_states: states.to_vec(), cost, fidelity_target: None };
    let batch = BatchConfig { m_tot: 4, improved_sampling: false, seed, ..Default::default() };
    let g = batch_gradient(&problem, pulse, &batch, 0, None)?.gradient;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let n = pulse.steps();
    for k in 0..pulse.controls() {
        for j in [0, n / 2, n - 1] {
            let mut plus = pulse.clone();
            plus.set(k, j, pulse.get(k, j) + h);
            let mut minus = pulse.clone();
            minus.set(k, j, pulse.get(k, j) - h);
            let cp = batch_gradient(&problem, &plus, &batch, 0, None)?.record.total_cost;
            let cm = batch_gradient(&problem, &minus, &batch, 0, None)?.record.total_cost;
            let fd = (cp - cm) / (2.0 * h);
            let scale = g[k][j].abs().max(fd.abs()).max(1e-3);
            worst = worst.max((fd - g[k][j]).abs() / scale);
        }
    }
    Ok(Check::below("gradient_fd_relative_error", worst, 1e-5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_times_cover_the_window() {
        assert_eq!(sample_times(200, 20).len(), 20);
        assert_eq!(*sample_times(200, 20).last().unwrap(), 200);
        assert_eq!(sample_times(3, 20), vec![1, 2, 3]);
    }

    #[test]
    fn sigma_of_exact_zero_variance() {
        assert_eq!(deviation_sigma(0.0, 0.0, 0.0), 0.0);
        assert!(deviation_sigma(0.5, 0.0, 0.0).is_infinite());
        assert_eq!(deviation_sigma(1.0, 0.5, 0.0), 2.0);
    }

    #[test]
    fn resolution_floor_spans_the_spectrum() {
        let p = jumpgrad::model::operators::projector(3, 1);
        assert!((resolution_floor(&p, 100) - 0.01).abs() < 1e-9);
        let x = jumpgrad::model::operators::quadrature_x(&jumpgrad::model::operators::destroy(2));
        assert!((resolution_floor(&x, 10) - 0.2).abs() < 1e-9);
    }
}
