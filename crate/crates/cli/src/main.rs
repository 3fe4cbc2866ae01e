// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jumpgrad_cli::{load_config, run, Command, Overrides};

#[derive(Parser, Debug)]
#[command(name = "jumpgrad", version, about = "Trajectory-based optimal control for open quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Config file, or the name of a bundled config.
    #[arg(long, global = true, env = "JUMPGRAD_CONFIG")]
    config: Option<String>,
    #[arg(long, global = true, env = "JUMPGRAD_SEED")]
    seed: Option<u64>,
    /// Trajectory worker threads (0: one per core).
    #[arg(long, global = true, env = "JUMPGRAD_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true, env = "JUMPGRAD_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, env = "JUMPGRAD_MAX_ITERATIONS")]
    max_iterations: Option<usize>,
    #[arg(long, global = true, env = "JUMPGRAD_TARGET_FIDELITY")]
    target_fidelity: Option<f64>,
    /// Use the full 30-level resonator for readout configs.
    #[arg(long, global = true, env = "JUMPGRAD_FULL_SCALE")]
    full_scale: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Jump-trajectory ensemble compared with the master equation.
    Simulate,
    /// Optimize the pulse against the configured costs.
    Optimize,
    /// Diffusive readout, filtering and classification.
    Classify,
    /// Invariant and oracle checks.
    Validate,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let Some(config) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Optimize => Command::Optimize,
        Cmd::Classify => Command::Classify,
        Cmd::Validate => Command::Validate,
    };
    let overrides = Overrides {
        seed: cli.seed,
        out_dir: cli.out_dir,
        max_iterations: cli.max_iterations,
        target_fidelity: cli.target_fidelity,
        full_scale: cli.full_scale,
    };
    let result = load_config(config).and_then(|cfg| run(command, cfg, &overrides, cli.workers));
    match result {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
