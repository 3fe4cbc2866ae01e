// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use jumpgrad::linalg::{matvec_exp, StateBatch, C64};
use jumpgrad::model::operators::basis;
use jumpgrad::model::{
    build_system, effective_hamiltonian, ControlPulse, JcReadoutParams, OpenSystem, SystemSpec, TransmonParams,
};
use jumpgrad::trajectory::rng::Purpose;
use jumpgrad::trajectory::{run_trajectories, sample_ensemble, BatchConfig, SimOptions, TapeContext, TrajectoryStat};

fn transmon() -> OpenSystem {
    build_system(&SystemSpec::Transmon(TransmonParams { t1_ns: Some(20.0), ..Default::default() })).unwrap()
}

fn wave(controls: usize, steps: usize, dt: f64) -> ControlPulse {
    let rows = (0..controls).map(|k| (0..steps).map(|j| 0.5 * ((j + 3 * k) as f64 * 0.05).sin()).collect()).collect();
    ControlPulse::new(dt, rows).unwrap()
}

fn bench_matvec_exp(c: &mut Criterion) {
    let p = JcReadoutParams::default();
    let sys = build_system(&SystemSpec::JcReadout(p.clone())).unwrap();
    let pulse = ControlPulse::new(0.5, vec![vec![0.1]]).unwrap();
    let gen = effective_hamiltonian(&sys, &pulse, 0).unwrap().scale(C64::new(0.0, -0.5));
    let mut group = c.benchmark_group("matvec_exp_d45");
    for width in [1usize, 8] {
        let cols: Vec<Vec<C64>> = (0..width).map(|k| basis(p.dim(), k)).collect();
        let v = StateBatch::from_columns(&cols).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(width), &v, |b, v| {
            b.iter(|| matvec_exp(black_box(&gen), black_box(v), 1e-12, 100).unwrap())
        });
    }
    group.finish();
}

fn bench_trajectories(c: &mut Criterion) {
    let sys = transmon();
    let pulse = wave(2, 200, 0.05);
    let psi0 = basis(sys.dim(), 0);
    let opts = SimOptions { store_stride: 0, ..Default::default() };
    let mut group = c.benchmark_group("transmon_64_trajectories");
    for width in [1usize, 8] {
        group.bench_with_input(BenchmarkId::new("cluster_width", width), &width, |b, &w| {
            b.iter(|| run_trajectories(&sys, &pulse, &psi0, 64, w, 1, (Purpose::Test, 0, 0), &opts, None).unwrap())
        });
    }
    group.finish();
}

fn bench_tape(c: &mut Criterion) {
    let sys = transmon();
    let pulse = wave(2, 200, 0.05);
    let psi0 = basis(sys.dim(), 0);
    let stats = [TrajectoryStat::FinalOverlap { target: basis(sys.dim(), 1) }];
    let opts = SimOptions { store_stride: 0, ..Default::default() };
    let ctx = TapeContext { sys: &sys, pulse: &pulse, stats: &stats, opts: &opts };
    let cfg = BatchConfig { m_tot: 10, ..Default::default() };
    c.bench_function("improved_batch_forward", |b| b.iter(|| sample_ensemble(ctx, &psi0, &cfg, 0, 0, None).unwrap()));
    let sample = sample_ensemble(ctx, &psi0, &cfg, 0, 0, None).unwrap();
    c.bench_function("improved_batch_backward", |b| b.iter(|| sample.backward(ctx, black_box(&[-1.0]), None).unwrap()));
}

criterion_group!(benches, bench_matvec_exp, bench_trajectories, bench_tape);
criterion_main!(benches);
