// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Config ingestion, run orchestration and result persistence for the
//! `jumpgrad` binary.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod error;
pub mod persist;

use std::path::Path;

pub use config::{Overrides, RunConfig};
pub use error::CliError;

/// Bundled example configs, addressable by name in `--config`.
pub const BUNDLED: [(&str, &str); 4] = [
    ("transmon-closed", include_str!("../configs/transmon-closed.json")),
    ("transmon-T1-100ns", include_str!("../configs/transmon-T1-100ns.json")),
    ("lambda-10ns", include_str!("../configs/lambda-10ns.json")),
    ("jc-readout-desk", include_str!("../configs/jc-readout-desk.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Load a config file, falling back to a bundled config of that name.
pub fn load_config(spec: &str) -> Result<RunConfig, CliError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(text) = bundled(spec) {
            return RunConfig::from_json(text);
        }
    }
    RunConfig::load(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Optimize,
    Classify,
    Validate,
}

/// Run one command; returns a one-line summary.
pub fn run(command: Command, mut cfg: RunConfig, overrides: &Overrides, workers: usize) -> Result<String, CliError> {
    cfg.apply(overrides);
    let ctx = commands::Context::new(cfg, workers)?;
    let out = ctx.writer.dir.display().to_string();
    Ok(match command {
        Command::Simulate => {
            let s = commands::simulate(&ctx)?;
            format!(
                "simulate: {} trajectories, max deviation {:.2} sigma over {} comparisons -> {out}",
                s.trajectories, s.max_deviation_sigma, s.comparisons
            )
        }
        Command::Optimize => {
            let o = commands::optimize_run(&ctx)?;
            let s = &o.summary;
            format!(
                "optimize: {} iterations, batch fidelity {:.5}, oracle fidelity {} -> {out}",
                s.iterations,
                s.final_batch_fidelity,
                s.oracle_fidelity.map(|x| format!("{x:.5}")).unwrap_or_else(|| "n/a".into())
            )
        }
        Command::Classify => {
            let c = commands::classify(&ctx)?;
            let f: Vec<String> = c.summary.fidelities.iter().map(|x| format!("{x:.4}")).collect();
            format!("classify: fidelities [{}] -> {out}", f.join(", "))
        }
        Command::Validate => {
            let checks = commands::validate(&ctx)?;
            format!("validate: {} checks passed -> {out}", checks.len())
        }
    })
}
