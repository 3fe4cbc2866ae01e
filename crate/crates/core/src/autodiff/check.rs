// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64 as C64;

use super::{NodeId, Op, Tape, Value};
use crate::error::{Error, Result};

/// Compare reverse-mode gradients with central differences on every leaf
/// component (real and imaginary parts separately for complex leaves).
///
/// Returns `max_i |g_i - fd_i| / max(max_i |fd_i|, 1e-300)`: the worst
/// component error relative to the largest finite-difference component.
pub fn gradient_check(tape: &Tape, cost: NodeId, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {step}")));
    }
    let grads = tape.backward(cost)?;
    let eval = |leaf: NodeId, k: usize, delta: C64| -> Result<f64> {
        let base = tape.value(leaf);
        let mut data = base.to_vec();
        data[k] += delta;
        let v = tape.replay(&[(leaf, base.with_entries(data))], cost)?;
        Ok(v.as_scalar().ok_or(Error::NonScalarCost)?.re)
    };
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for &leaf in tape.leaves() {
        let real = matches!(tape.node(leaf).op, Op::Leaf { real: true });
        let adj = grads.get(leaf).map(Value::to_vec).unwrap_or_default();
        for (k, g) in adj.iter().enumerate() {
            let dirs: &[(C64, f64)] = if real {
                &[(C64::new(1.0, 0.0), 0.0)]
            } else {
                &[(C64::new(1.0, 0.0), 0.0), (C64::new(0.0, 1.0), 1.0)]
            };
            for &(dir, part) in dirs {
                let plus = eval(leaf, k, dir * step)?;
                let minus = eval(leaf, k, -dir * step)?;
                let fd = (plus - minus) / (2.0 * step);
                let ad = if part == 0.0 { g.re } else { g.im };
                pairs.push((ad, fd));
            }
        }
    }
    let scale = pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max).max(1e-300);
    Ok(pairs.iter().map(|(a, f)| (a - f).abs()).fold(0.0, f64::max) / scale)
}
