// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! `bqec`: command-line front end for the bosonic-qec simulator.
//!
//! Exit codes: 0 success, 1 validation or runtime error, 2 finished with
//! warnings (e.g. GRAPE below its target fidelity).

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bosonic_qec::config::RunConfig;
use bosonic_qec::{Error, Result};
use clap::{Parser, Subcommand};

use commands::{BaselineArg, GrapeTarget};
use output::Artifacts;

/// Built-in defaults, identical to config/default.toml.
const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Parser, Debug)]
#[command(name = "bqec", version = output::REVISION, about = "Binomial-code bosonic QEC simulator")]
struct Cli {
    /// TOML run configuration (defaults to the built-in reference config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Comb parity map: amplitude scalings, delay sweep, per-Fock errors, comb vs Ramsey.
    ParityCalib,
    /// Optimize a control pulse with GRAPE.
    Grape {
        #[arg(long, value_enum)]
        target: GrapeTarget,
    },
    /// Repetitive QEC with process tomography and a decay fit.
    Qec {
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        cycles: Option<usize>,
        #[arg(long)]
        trajectories: Option<usize>,
        /// Use the master equation instead of trajectories.
        #[arg(long)]
        master_equation: bool,
        /// Run an uncorrected baseline encoding over the same time window instead.
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
    },
    /// Analytic error budget and predicted lifetimes.
    Budget {
        /// Replace one operation error, KEY=VALUE (repeatable).
        #[arg(long = "eps-override", value_name = "KEY=VALUE")]
        eps_override: Vec<String>,
        /// Print the per-branch error table, not only the totals.
        #[arg(long)]
        table: bool,
    },
    /// Wigner function of a cavity state on the configured grid.
    Wigner {
        /// vacuum, fock:N, zero-l, one-l, plus-x, minus-x, plus-y or minus-y.
        #[arg(long, default_value = "vacuum", conflicts_with = "state_file")]
        state: String,
        /// File of cavity amplitudes "re,im" per line.
        #[arg(long)]
        state_file: Option<PathBuf>,
    },
    /// Lifetime versus waiting time.
    SweepTwait {
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        master_equation: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ParityCalib => "parity-calib",
            Command::Grape { .. } => "grape",
            Command::Qec { .. } => "qec",
            Command::Budget { .. } => "budget",
            Command::Wigner { .. } => "wigner",
            Command::SweepTwait { .. } => "sweep-twait",
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_toml_str(DEFAULT_CONFIG, Path::new("."))?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Command::Qec { layers, cycles, trajectories, master_equation, .. } = &cli.command {
        cfg.qec.layers = layers.unwrap_or(cfg.qec.layers);
        cfg.qec.cycles = cycles.unwrap_or(cfg.qec.cycles);
        cfg.qec.stride = cfg.qec.stride.min(cfg.qec.cycles.max(1));
        cfg.qec.trajectories = trajectories.unwrap_or(cfg.qec.trajectories);
        cfg.qec.master_equation |= master_equation;
    }
    if let Command::SweepTwait { layers, trajectories, master_equation } = &cli.command {
        cfg.qec.layers = layers.unwrap_or(cfg.qec.layers);
        cfg.qec.trajectories = trajectories.unwrap_or(cfg.qec.trajectories);
        cfg.qec.master_equation |= master_equation;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, arguments: &[String]) -> Result<Vec<String>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    let cfg = load_config(cli)?;
    let mut out = Artifacts::new(&cfg.output_dir)?;
    match &cli.command {
        Command::ParityCalib => commands::parity_calib(&cfg, &mut out)?,
        Command::Grape { target } => commands::grape(&cfg, *target, &mut out)?,
        Command::Qec { baseline, .. } => commands::qec(&cfg, *baseline, &mut out)?,
        Command::Budget { eps_override, table } => commands::budget(&cfg, eps_override, *table, &mut out)?,
        Command::Wigner { state, state_file } => {
            let n = cfg.wigner.n_fock;
            let (name, amps) = match state_file {
                Some(p) => {
                    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "state".into());
                    (stem, commands::read_state_file(p, n)?)
                }
                None => (state.clone(), commands::named_state(state, n)?),
            };
            commands::wigner(&cfg, &name, amps, &mut out)?
        }
        Command::SweepTwait { .. } => commands::sweep_twait(&cfg, &mut out)?,
    }
    let manifest = out.finish(cli.command.name(), arguments, &cfg.hash()?, cfg.seed)?;
    log::info!("wrote {} files and {}", out.files.len(), manifest.display());
    Ok(out.warnings)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let arguments: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(&cli, &arguments) {
        Ok(warnings) if warnings.is_empty() => ExitCode::SUCCESS,
        Ok(warnings) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
