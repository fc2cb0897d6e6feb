// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command implementations. Each returns the artifacts it wrote.

use std::io::Write;
use std::path::Path;

use bosonic_qec::budget::{Layers, OperationErrors};
use bosonic_qec::code::{cardinal_states, lowest_order_binomial, Subspace};
use bosonic_qec::comb::{
    calibrate_scaling, comb_fock_excitation, ramsey_parity_map, simulate_parity_map, simulated_stark_shift,
    RamseyPulses,
};
use bosonic_qec::config::RunConfig;
use bosonic_qec::grape::{
    decode_transfers, drift_hash, encode_transfers, optimize, write_pulse_csv, ControlProblem,
};
use bosonic_qec::qec::{
    baseline_lifetimes, run_repetitive, sweep_waiting_time, Baseline, FeedbackPolicy, FidelityTable, Gate,
    QecEngine, Role,
};
use bosonic_qec::quantum::{wigner_grid, CVector, DensityMatrix, Space, StateVector, C64};
use bosonic_qec::units::{to_hz, NS, US};
use bosonic_qec::{Error, Result};

use crate::output::{num, Artifacts};

/// Parity-map characterization: amplitude scalings, delay sweep, per-Fock
/// errors and the comb-vs-Ramsey comparison.
pub fn parity_calib(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let params = cfg.system.params()?;
    let spec = cfg.comb.spec(&params)?;
    let c = &cfg.comb;

    out.write("parity_amplitude_scaling.csv", |w| {
        writeln!(w, "pair,detuning_mhz,applied_scaling,stark_shift_khz,inferred_scaling")?;
        for n in 0..spec.m_pairs {
            let detuning = (2 * n + 1) as f64 * spec.chi;
            let applied = spec.scalings.get(n).copied().unwrap_or(1.0);
            let shift = simulated_stark_shift(detuning, applied * spec.omega);
            let inferred = calibrate_scaling(detuning, shift, 2.0 * spec.omega)?;
            writeln!(
                w,
                "{n},{},{},{},{}",
                num(to_hz(detuning) / 1e6),
                num(applied),
                num(to_hz(shift) / 1e3),
                num(inferred)
            )?;
        }
        Ok(())
    })?;

    out.write("parity_delay_sweep.csv", |w| {
        write!(w, "delay_ns")?;
        for n in 0..c.report_fock {
            write!(w, ",error_fock{n}")?;
        }
        writeln!(w, ",mean_fidelity")?;
        for &delay in &c.delay_grid_ns {
            let mut s = spec.clone();
            s.delay = delay * NS;
            let exc = comb_fock_excitation(&s, &params, c.report_fock, c.dt())?;
            let errors: Vec<f64> = exc.iter().enumerate().map(|(n, p)| if n % 2 == 0 { *p } else { 1.0 - p }).collect();
            let mean = 1.0 - errors.iter().sum::<f64>() / errors.len() as f64;
            write!(w, "{}", num(delay))?;
            for e in &errors {
                write!(w, ",{}", num(*e))?;
            }
            writeln!(w, ",{}", num(mean))?;
        }
        Ok(())
    })?;

    let vacuum = StateVector::fock(c.n_fock, 0)?.to_density();
    let ideal = simulate_parity_map(&vacuum, &spec, &params, &c.parity_options(false, None))?;
    let noisy = simulate_parity_map(&vacuum, &spec, &params, &c.parity_options(true, Some(cfg.readout.model()?)))?;
    if ideal.truncation_warning || noisy.truncation_warning {
        out.warn("parity map population reaches the Fock truncation");
    }
    out.write("parity_fock_errors.csv", |w| {
        writeln!(w, "state,ideal_excitation,ideal_error,ideal_conditional_fidelity,noisy_error")?;
        for n in 0..ideal.fock_error.len() {
            writeln!(
                w,
                "fock{n},{},{},{},{}",
                num(ideal.fock_excitation[n]),
                num(ideal.fock_error[n]),
                num(ideal.fock_conditional_fidelity[n]),
                num(noisy.fock_error[n])
            )?;
        }
        writeln!(w, "code-space,,{},,{}", num(ideal.code_space_error), num(noisy.code_space_error))?;
        writeln!(w, "error-space,,{},,{}", num(ideal.error_space_error), num(noisy.error_space_error))?;
        Ok(())
    })?;
    println!(
        "parity detection error: code space {:.3}%, error space {:.3}% (decoherence and readout)",
        100.0 * noisy.code_space_error,
        100.0 * noisy.error_space_error
    );

    let mut opts = c.parity_options(false, None);
    opts.n_fock = opts.n_fock.max(c.compare_fock + 2);
    opts.report_fock = c.compare_fock;
    let vacuum = StateVector::fock(opts.n_fock, 0)?.to_density();
    let comb = simulate_parity_map(&vacuum, &spec, &params, &opts)?;
    let instant = ramsey_parity_map(&vacuum, &params, params.chi_qc, RamseyPulses::Instantaneous, &opts)?;
    let finite = ramsey_parity_map(
        &vacuum,
        &params,
        params.chi_qc,
        RamseyPulses::Finite { duration: c.ramsey_pulse_ns * NS },
        &opts,
    )?;
    out.write("parity_comb_vs_ramsey.csv", |w| {
        writeln!(w, "fock,comb_error,ramsey_instant_error,ramsey_finite_error")?;
        for n in 0..comb.fock_error.len() {
            writeln!(
                w,
                "{n},{},{},{}",
                num(comb.fock_error[n]),
                num(instant.fock_error[n]),
                num(finite.fock_error[n])
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

/// Optimal-control targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GrapeTarget {
    Encode,
    Decode,
    U0,
    U1,
    U2,
    U3,
}

impl GrapeTarget {
    fn role(self) -> Option<Role> {
        match self {
            GrapeTarget::U0 => Some(Role::U0),
            GrapeTarget::U1 => Some(Role::U1),
            GrapeTarget::U2 => Some(Role::U2),
            GrapeTarget::U3 => Some(Role::U3),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            GrapeTarget::Encode => "encode",
            GrapeTarget::Decode => "decode",
            GrapeTarget::U0 => "u0",
            GrapeTarget::U1 => "u1",
            GrapeTarget::U2 => "u2",
            GrapeTarget::U3 => "u3",
        }
    }
}

fn normalized(space: &Space, v: &CVector) -> Result<StateVector> {
    let norm = v.norm();
    if !(norm > 1e-12) {
        return Err(Error::Calibration("recovery reference state has zero norm".into()));
    }
    StateVector::new(space.clone(), v.unscale(norm))
}

/// Transfer set of a recovery role: the engine's ideal calibration references.
fn recovery_transfers(cfg: &RunConfig, role: Role) -> Result<Vec<(StateVector, StateVector)>> {
    let params = cfg.system.params()?;
    let mut cycle = cfg.qec.cycle_config(&params, &cfg.base_dir)?;
    cycle.n_fock = cfg.grape.n_fock;
    for gate in cycle.recoveries.values_mut() {
        *gate = Gate::Ideal;
    }
    let policy = FeedbackPolicy::default_for(cycle.layers);
    if !policy.roles().contains(&role) {
        return Err(Error::Config(format!(
            "role {role} is not used by the {}-layer policy (set qec.layers)",
            cycle.layers.count()
        )));
    }
    let engine = QecEngine::new(cycle, policy)?;
    let (sources, targets) = engine
        .recovery_transfers(role)
        .ok_or_else(|| Error::MissingRole(role.to_string()))?;
    let space = engine.space().clone();
    sources.iter().zip(targets).map(|(s, t)| Ok((normalized(&space, s)?, normalized(&space, t)?))).collect()
}

pub fn grape(cfg: &RunConfig, target: GrapeTarget, out: &mut Artifacts) -> Result<()> {
    let params = cfg.system.params()?;
    let g = &cfg.grape;
    let code = lowest_order_binomial(g.n_fock)?;
    let (transfers, duration) = match target.role() {
        None if target == GrapeTarget::Encode => (encode_transfers(&code)?, g.duration_ns * NS),
        None => (decode_transfers(&code)?, g.duration_ns * NS),
        Some(role) => (recovery_transfers(cfg, role)?, g.recovery_duration_ns * NS),
    };
    let prob = ControlProblem::new(&params, g.n_fock, transfers, duration, g.dt_ns * NS)?;
    let result = optimize(&prob, &g.optimizer(cfg.seed)?)?;
    let name = target.name();
    let hash = drift_hash(&prob.h0);
    out.write(&format!("grape_{name}.csv"), |w| write_pulse_csv(w, &result.pulse, &hash))?;
    out.write(&format!("grape_{name}_convergence.csv"), |w| {
        writeln!(w, "iteration,fidelity,objective")?;
        for e in &result.trace {
            writeln!(w, "{},{},{}", e.iteration, num(e.fidelity), num(e.objective))?;
        }
        Ok(())
    })?;
    println!("{name}: fidelity {:.5} after {} iterations", result.fidelity, result.iterations);
    if !result.converged || result.fidelity < g.target_fidelity {
        out.warn(format!(
            "{name} did not reach the target fidelity {} (got {:.5})",
            g.target_fidelity, result.fidelity
        ));
    }
    Ok(())
}

/// Baseline encodings for `qec --baseline`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineArg {
    Fock01,
    Transmon,
    UncorrectedBinomial,
}

impl From<BaselineArg> for Baseline {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Fock01 => Baseline::Fock01,
            BaselineArg::Transmon => Baseline::Transmon,
            BaselineArg::UncorrectedBinomial => Baseline::UncorrectedBinomial,
        }
    }
}

fn write_table_and_fit(table: &FidelityTable, out: &mut Artifacts) -> Result<()> {
    let label = table.label.clone();
    out.write(&format!("qec_{label}.csv"), |w| table.write_csv(w))?;
    match table.fit() {
        Ok(fit) => {
            out.write(&format!("qec_{label}_fit.csv"), |w| {
                writeln!(w, "label,amplitude,amplitude_se,lifetime_us,lifetime_se_us,offset,residual_norm")?;
                writeln!(
                    w,
                    "{label},{},{},{},{},{},{}",
                    num(fit.amplitude),
                    num(fit.amplitude_se),
                    num(fit.lifetime / US),
                    num(fit.lifetime_se / US),
                    num(fit.offset),
                    num(fit.residual_norm)
                )?;
                Ok(())
            })?;
            println!("{label}: τ = {:.1} ± {:.1} µs (A = {:.3})", fit.lifetime / US, fit.lifetime_se / US, fit.amplitude);
        }
        Err(e) => out.warn(format!("{label}: no decay fit ({e})")),
    }
    Ok(())
}

pub fn qec(cfg: &RunConfig, baseline: Option<BaselineArg>, out: &mut Artifacts) -> Result<()> {
    let params = cfg.system.params()?;
    let cycle = cfg.qec.cycle_config(&params, &cfg.base_dir)?;
    let opts = cfg.qec.repetitive_options(cfg.seed);
    let table = match baseline {
        Some(b) => {
            let times: Vec<f64> = (0..=opts.n_cycles)
                .step_by(opts.stride)
                .map(|k| k as f64 * cycle.cycle_duration())
                .collect();
            baseline_lifetimes(&params, b.into(), &times)?
        }
        None => {
            let engine = QecEngine::new(cycle.clone(), FeedbackPolicy::default_for(cycle.layers))?;
            let run = run_repetitive(&engine, &opts)?;
            let total: f64 = run.branch_weights.iter().sum();
            if total > 0.0 {
                out.write(&format!("qec_{}_branches.csv", run.table.label), |w| {
                    writeln!(w, "branch,probability")?;
                    for (i, wgt) in run.branch_weights.iter().enumerate() {
                        writeln!(w, "{},{}", cycle.layers.branch_label(i), num(wgt / total))?;
                    }
                    Ok(())
                })?;
            }
            run.table
        }
    };
    write_table_and_fit(&table, out)
}

/// Keys accepted by `budget --eps-override`.
pub const BUDGET_KEYS: &str = "detection.code, detection.error, recovery.U0..U3, reset, thermal.one, thermal.two";

/// Apply `key=value` overrides; returns thermal overrides for (one, two) layers.
pub fn apply_overrides(ops: &mut OperationErrors, overrides: &[String]) -> Result<[Option<f64>; 2]> {
    let mut thermal = [None, None];
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{item}' is not key=value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("override {key}: cannot parse '{value}': {e}")))?;
        let slot = match key.trim() {
            "detection.code" => &mut ops.detection[0],
            "detection.error" => &mut ops.detection[1],
            "recovery.U0" => &mut ops.recovery[0],
            "recovery.U1" => &mut ops.recovery[1],
            "recovery.U2" => &mut ops.recovery[2],
            "recovery.U3" => &mut ops.recovery[3],
            "reset" => &mut ops.reset,
            "thermal.one" => thermal[0].insert(0.0),
            "thermal.two" => thermal[1].insert(0.0),
            other => return Err(Error::Config(format!("unknown override key '{other}' (expected one of {BUDGET_KEYS})"))),
        };
        *slot = v;
    }
    Ok(thermal)
}

pub fn budget(cfg: &RunConfig, overrides: &[String], table: bool, out: &mut Artifacts) -> Result<()> {
    let mut ops = OperationErrors { detection: cfg.budget.detection, recovery: cfg.budget.recovery, reset: cfg.budget.reset };
    let thermal = apply_overrides(&mut ops, overrides)?;
    let mut results = Vec::new();
    for (k, layers) in [Layers::One, Layers::Two].into_iter().enumerate() {
        let mut inputs = cfg.budget.inputs(layers);
        inputs.operations = ops.clone();
        if let Some(t) = thermal[k] {
            inputs.thermal_override = Some(t);
        }
        results.push((layers, inputs.evaluate()?));
    }
    out.write("budget_rows.csv", |w| {
        writeln!(w, "layers,branch,probability,intrinsic,detection,recovery,thermal,total")?;
        for (layers, r) in &results {
            for row in &r.rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    layers.count(),
                    row.label,
                    num(row.probability),
                    num(row.intrinsic),
                    num(row.detection),
                    num(row.recovery),
                    num(row.thermal),
                    num(row.total)
                )?;
            }
        }
        Ok(())
    })?;
    out.write("budget_summary.csv", |w| {
        writeln!(w, "layers,total,cycle_us,lifetime_us")?;
        for (layers, r) in &results {
            writeln!(w, "{},{},{},{}", layers.count(), num(r.total), num(r.cycle / US), num(r.lifetime / US))?;
        }
        Ok(())
    })?;
    for (layers, r) in &results {
        println!("{}-layer QEC (cycle {:.2} µs)", layers.count(), r.cycle / US);
        if table {
            println!("  {:<6} {:>8} {:>9} {:>9} {:>9} {:>8} {:>8}", "branch", "p", "intrinsic", "detection", "recovery", "thermal", "total");
            for row in &r.rows {
                println!(
                    "  {:<6} {:>7.1}% {:>8.2}% {:>8.2}% {:>8.2}% {:>7.2}% {:>7.2}%",
                    row.label,
                    100.0 * row.probability,
                    100.0 * row.intrinsic,
                    100.0 * row.detection,
                    100.0 * row.recovery,
                    100.0 * row.thermal,
                    100.0 * row.total
                );
            }
        }
        println!("  weighted total {:.2}%, predicted lifetime {:.0} µs", 100.0 * r.total, r.lifetime / US);
    }
    Ok(())
}

/// Named Wigner states; the logical ones use the binomial codewords.
pub fn named_state(name: &str, n_fock: usize) -> Result<CVector> {
    if let Some(n) = name.strip_prefix("fock:") {
        let n: usize = n.parse().map_err(|e| Error::Config(format!("state '{name}': {e}")))?;
        return Ok(StateVector::fock(n_fock, n)?.amplitudes().clone());
    }
    let idx = match name {
        "vacuum" => return Ok(StateVector::fock(n_fock, 0)?.amplitudes().clone()),
        "zero-l" => 0,
        "one-l" => 1,
        "plus-x" => 2,
        "minus-x" => 3,
        "plus-y" => 4,
        "minus-y" => 5,
        other => {
            return Err(Error::Config(format!(
                "unknown state '{other}' (vacuum, fock:N, zero-l, one-l, plus-x, minus-x, plus-y, minus-y)"
            )))
        }
    };
    let code = lowest_order_binomial(n_fock)?;
    Ok(cardinal_states(&code, Subspace::Code)[idx].clone())
}

/// Read cavity amplitudes "re,im" per line ('#' starts a comment).
pub fn read_state_file(path: &Path, n_fock: usize) -> Result<CVector> {
    let text = std::fs::read_to_string(path)?;
    let mut amps = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse = |s: Option<&str>| -> Result<f64> {
            s.unwrap_or("0")
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), no + 1)))
        };
        let mut parts = line.split(',');
        let re = parse(parts.next())?;
        let im = parse(parts.next())?;
        amps.push(C64::new(re, im));
    }
    if amps.is_empty() || amps.len() > n_fock {
        return Err(Error::Config(format!(
            "state file has {} amplitudes; need 1..={n_fock} (wigner.n_fock)",
            amps.len()
        )));
    }
    amps.resize(n_fock, C64::new(0.0, 0.0));
    let v = CVector::from_vec(amps);
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(Error::Config("state file amplitudes are all zero".into()));
    }
    Ok(v.unscale(norm))
}

pub fn wigner(cfg: &RunConfig, name: &str, amplitudes: CVector, out: &mut Artifacts) -> Result<()> {
    let n = cfg.wigner.n_fock;
    let rho: DensityMatrix = StateVector::new(Space::single(n)?, amplitudes)?.to_density();
    let axis = cfg.wigner.axis();
    let grid = wigner_grid(&rho, &axis, &axis)?;
    if grid.truncation_warning {
        out.warn(format!("state '{name}' has population near the Fock truncation {n}"));
    }
    let file = format!("wigner_{}.csv", name.replace(':', ""));
    out.write(&file, |w| {
        write!(w, "im_alpha\\re_alpha")?;
        for x in &grid.xs {
            write!(w, ",{}", num(*x))?;
        }
        writeln!(w)?;
        for (r, y) in grid.ys.iter().enumerate() {
            write!(w, "{}", num(*y))?;
            for c in 0..grid.xs.len() {
                write!(w, ",{}", num(grid.values[(r, c)]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(())
}

pub fn sweep_twait(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let params = cfg.system.params()?;
    let cycle = cfg.qec.cycle_config(&params, &cfg.base_dir)?;
    let grid: Vec<f64> = cfg.qec.sweep_grid_us.iter().map(|t| t * US).collect();
    let policy = FeedbackPolicy::default_for(cycle.layers);
    let opts = cfg.qec.repetitive_options(cfg.seed);
    let table = sweep_waiting_time(&cycle, &policy, &grid, cfg.qec.sweep_window_us * US, &opts)?;
    out.write("sweep_twait.csv", |w| table.write_csv(w))?;
    for p in &table.points {
        if let Some(e) = &p.fit_error {
            out.warn(format!("t_wait = {:.1} µs: {e}", p.t_wait / US));
        }
    }
    let best = &table.points[table.best];
    let fit = best.fit.as_ref().expect("best point has a fit");
    println!("optimal waiting time {:.1} µs: τ = {:.1} ± {:.1} µs", best.t_wait / US, fit.lifetime / US, fit.lifetime_se / US);
    Ok(())
}
