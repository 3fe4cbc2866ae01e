// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use jumpgrad::model::operators::basis;
use jumpgrad::model::{build_system, ControlPulse, OpenSystem, SystemSpec, TransmonParams};
use jumpgrad::trajectory::{
    improved_sampling_batch, naive_batch, sample_ensemble, BatchConfig, SimOptions, TapeContext, TrajectoryStat,
};
use proptest::prelude::*;

fn lossy(t1: f64) -> OpenSystem {
    build_system(&SystemSpec::Transmon(TransmonParams { t1_ns: Some(t1), ..Default::default() })).unwrap()
}

fn pulse(controls: usize) -> ControlPulse {
    let rows = (0..controls).map(|k| (0..10).map(|j| 0.4 * ((j + k) as f64 * 0.5).cos()).collect()).collect();
    ControlPulse::new(0.2, rows).unwrap()
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn improved_and_naive_gradients_agree_in_mean() {
    let sys = lossy(4.0);
    let d = sys.dim();
    let u = pulse(sys.controls().len());
    let (psi0, target) = (basis(d, 1), basis(d, 1));
    let reps = 150;
    let cfg = BatchConfig { m_tot: 10, seed: 17, ..Default::default() };
    let collect = |improved: bool| -> Vec<Vec<f64>> {
        (0..reps as u64)
            .map(|it| {
                let g = if improved {
                    improved_sampling_batch(&sys, &u, &psi0, &target, &cfg, it, None)
                } else {
                    naive_batch(&sys, &u, &psi0, &target, &cfg, it + 10_000, None)
                };
                g.unwrap().gradient.concat()
            })
            .collect()
    };
    let imp = collect(true);
    let nai = collect(false);
    let mut checked = 0;
    for c in 0..imp[0].len() {
        let a: Vec<f64> = imp.iter().map(|g| g[c]).collect();
        let b: Vec<f64> = nai.iter().map(|g| g[c]).collect();
        let (ma, va) = mean_and_var(&a);
        let (mb, vb) = mean_and_var(&b);
        let se = ((va + vb) / reps as f64).sqrt();
        if se > 0.0 {
            checked += 1;
            assert!((ma - mb).abs() <= 4.0 * se, "component {c}: {ma} vs {mb} (se {se})");
        }
    }
    assert!(checked > 0);
}

/// The improved estimator's mean differs from the exact master-equation
/// value only by the O(dt) bias of letting a jump take a whole step.
#[test]
fn improved_cost_converges_to_exact_fidelity() {
    let sys = lossy(2.0);
    let d = sys.dim();
    let bias = |steps: usize| {
        let u = ControlPulse::new(2.0 / steps as f64, vec![vec![0.3; steps], vec![0.0; steps]]).unwrap();
        let rho0 = jumpgrad::oracles::DensityMatrix::pure(&basis(d, 1)).unwrap();
        let rho = jumpgrad::oracles::lindblad_propagate(&sys, &u, &rho0).unwrap();
        let exact = 1.0 - rho.last().unwrap().expectation(&jumpgrad::model::operators::projector(d, 1)).re;
        let cfg = BatchConfig { m_tot: 10, seed: 4, ..Default::default() };
        let costs: Vec<f64> = (0..200)
            .map(|it| improved_sampling_batch(&sys, &u, &basis(d, 1), &basis(d, 1), &cfg, it, None).unwrap().cost)
            .collect();
        let (m, v) = mean_and_var(&costs);
        ((m - exact).abs(), (v / costs.len() as f64).sqrt())
    };
    let (coarse, se_c) = bias(10);
    let (fine, se_f) = bias(80);
    assert!(fine < coarse / 4.0 + 4.0 * (se_c + se_f), "coarse {coarse} ({se_c}), fine {fine} ({se_f})");
    assert!(fine < 4.0 * se_f + 2e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn weights_sum_to_one_and_count_matches(t1 in 0.5f64..200.0, m_tot in 1usize..16, it in 0u64..50) {
        let sys = lossy(t1);
        let u = pulse(sys.controls().len());
        let stats = [TrajectoryStat::FinalOverlap { target: basis(sys.dim(), 0) }];
        let opts = SimOptions { store_stride: 0, ..Default::default() };
        let ctx = TapeContext { sys: &sys, pulse: &u, stats: &stats, opts: &opts };
        let cfg = BatchConfig { m_tot, seed: 1, ..Default::default() };
        let s = sample_ensemble(ctx, &basis(sys.dim(), 1), &cfg, it, 0, None).unwrap();
        let total: f64 = s.weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let expected = ((1.0 - s.p) * m_tot as f64 - 1e-9).ceil() as usize;
        prop_assert_eq!(s.m_sim, expected + 1);
        // Conditioned members must actually jump.
        for m in &s.members[1..] {
            prop_assert!(!m.result.jumps.is_empty());
        }
    }
}
