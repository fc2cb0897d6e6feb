// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Repetitive QEC runs with process tomography, idle baselines and the
//! waiting-time sweep.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cycle::QecEngine;
use super::fit::{fit_decay, DecayFit};
use super::tomography::{bloch_of, bloch_on, bloch_on_density, Bloch, ProcessMatrix};
use super::{FeedbackPolicy, Gate, QecCycleConfig};
use crate::budget::BranchSample;
use crate::code::{cardinal_from_basis, fock01, lowest_order_binomial};
use crate::dynamics::{CompiledSchedule, LindbladPropagator, MeProgram, PiecewisePulse, Schedule, Trajectory};
use crate::quantum::{annihilation, completed_isometry, number, CMatrix, CVector, C64, ONE};
use crate::rng;
use crate::system::SystemParams;
use crate::{Error, Result};

/// Simulation engine for repetitive runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Quantum-jump trajectories, `n_traj` per cardinal input.
    Trajectories { n_traj: usize },
    /// Density matrices with measurement branches summed.
    MasterEquation,
}

/// Where logical information is read out.
#[derive(Clone, Debug, PartialEq)]
pub enum TomographyMode {
    /// Perfect preparation; Bloch vectors taken on the code space directly.
    IdealSubspace,
    /// Ancilla cardinal states encoded into the cavity, decoded after each
    /// snapshot, and read from the ancilla (cavity traced out).
    ExperimentMirroring { encode: Gate, decode: Gate },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepetitiveOptions {
    pub n_cycles: usize,
    /// Snapshot every `stride` cycles (cycle 0 is always included).
    pub stride: usize,
    pub engine: Engine,
    pub mode: TomographyMode,
    pub seed: u64,
}

impl RepetitiveOptions {
    pub fn trajectories(n_cycles: usize, n_traj: usize, seed: u64) -> Self {
        Self { n_cycles, stride: 1, engine: Engine::Trajectories { n_traj }, mode: TomographyMode::IdealSubspace, seed }
    }

    pub fn master_equation(n_cycles: usize) -> Self {
        Self { n_cycles, stride: 1, engine: Engine::MasterEquation, mode: TomographyMode::IdealSubspace, seed: 0 }
    }
}

/// One process-tomography snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub cycles: usize,
    /// Time since the start of the first cycle (s).
    pub time: f64,
    /// F_χ against the identity.
    pub fidelity: f64,
    /// Statistical standard error of F_χ (zero for the master equation).
    pub fidelity_se: f64,
    pub chi: ProcessMatrix,
}

/// Process fidelity versus time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityTable {
    pub label: String,
    pub points: Vec<FidelityPoint>,
}

impl FidelityTable {
    pub fn fit(&self) -> Result<DecayFit> {
        fit_decay(&self.points.iter().map(|p| (p.time, p.fidelity)).collect::<Vec<_>>())
    }

    /// CSV with columns label, cycles, time_us, fidelity, fidelity_se.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "label,cycles,time_us,fidelity,fidelity_se")?;
        for p in &self.points {
            writeln!(w, "{},{},{:.11e},{:.11e},{:.11e}", self.label, p.cycles, p.time * 1e6, p.fidelity, p.fidelity_se)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitiveRun {
    pub table: FidelityTable,
    /// Reported-branch counts (trajectories) or summed probabilities
    /// (master equation) over all cycles and inputs.
    pub branch_weights: Vec<f64>,
    pub trajectories_per_input: usize,
}

enum Prepared {
    Dense(CMatrix),
    Pulse { traj: CompiledSchedule, me: MeProgram },
}

impl Prepared {
    fn new(gate: &Gate, ideal: impl FnOnce() -> Result<CMatrix>, engine: &QecEngine) -> Result<Self> {
        match gate {
            Gate::Ideal => Ok(Prepared::Dense(ideal()?)),
            Gate::Pulse(p) => {
                let s = pulse_schedule(p, engine)?;
                let ls: Vec<CMatrix> = engine.collapse().iter().map(|l| l.matrix().clone()).collect();
                Ok(Prepared::Pulse {
                    traj: CompiledSchedule::new(&s, engine.collapse(), 1e-6)?,
                    me: MeProgram::compile(&s, &ls, 50e-9)?,
                })
            }
        }
    }

    fn apply_traj(&self, t: &mut Trajectory) -> Result<()> {
        match self {
            Prepared::Dense(u) => {
                t.apply_dense(u);
                Ok(())
            }
            Prepared::Pulse { traj, .. } => t.evolve(traj),
        }
    }

    fn apply_rho(&self, rho: &CMatrix) -> CMatrix {
        match self {
            Prepared::Dense(u) => u * rho * u.adjoint(),
            Prepared::Pulse { me, .. } => me.apply(rho),
        }
    }
}

fn pulse_schedule(p: &PiecewisePulse, engine: &QecEngine) -> Result<Schedule> {
    let (h0, controls) = engine.drift_and_controls();
    let mut s = Schedule::new(h0.nrows());
    for k in 0..p.n_segments() {
        s.push(p.segment_hamiltonian(h0, controls, k), p.dt())?;
    }
    Ok(s)
}

/// Input preparation and readout for a tomography mode.
struct Frame {
    inputs: [CVector; 6],
    encode: Option<Prepared>,
    decode: Option<Prepared>,
    readout: [CVector; 2],
}

impl Frame {
    fn new(engine: &QecEngine, mode: &TomographyMode) -> Result<Self> {
        let [c0, c1] = engine.codewords().clone();
        match mode {
            TomographyMode::IdealSubspace => {
                Ok(Self { inputs: cardinal_from_basis(&c0, &c1), encode: None, decode: None, readout: [c0, c1] })
            }
            TomographyMode::ExperimentMirroring { encode, decode } => {
                let d = engine.space().dim();
                let n = engine.n_fock();
                let mut g0 = CVector::zeros(d);
                g0[0] = ONE;
                let mut e0 = CVector::zeros(d);
                e0[n] = ONE;
                let enc = Prepared::new(
                    encode,
                    || completed_isometry(&[g0.clone(), e0.clone()], &[c0.clone(), c1.clone()]),
                    engine,
                )?;
                let dec = Prepared::new(
                    decode,
                    || completed_isometry(&[c0.clone(), c1.clone()], &[g0.clone(), e0.clone()]),
                    engine,
                )?;
                Ok(Self {
                    inputs: cardinal_from_basis(&g0, &e0),
                    encode: Some(enc),
                    decode: Some(dec),
                    readout: [g0, e0],
                })
            }
        }
    }

    fn bloch_rho(&self, rho: &CMatrix, n_fock: usize) -> Bloch {
        match &self.decode {
            None => bloch_on_density(rho, &self.readout[0], &self.readout[1]),
            Some(dec) => ancilla_bloch(&dec.apply_rho(rho), n_fock),
        }
    }

    fn bloch_traj(&self, t: &Trajectory, n_fock: usize) -> Result<Bloch> {
        match &self.decode {
            None => Ok(bloch_on(&t.state(), &self.readout[0], &self.readout[1])),
            Some(dec) => {
                let mut c = t.clone();
                dec.apply_traj(&mut c)?;
                let s = c.state();
                Ok(ancilla_bloch(&(&s * s.adjoint()), n_fock))
            }
        }
    }
}

/// Bloch vector of the ancilla with the cavity traced out.
fn ancilla_bloch(rho: &CMatrix, n_fock: usize) -> Bloch {
    let q = CMatrix::from_fn(2, 2, |a, b| (0..n_fock).map(|k| rho[(a * n_fock + k, b * n_fock + k)]).sum());
    bloch_of(&q)
}

/// Axis measured by each cardinal input (±Z, ±X, ±Y) and its sign.
const INPUT_AXES: [(usize, f64); 6] = [(2, 1.0), (2, -1.0), (0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)];

fn snapshot_cycles(opts: &RepetitiveOptions) -> Vec<usize> {
    let stride = opts.stride.max(1);
    let mut v: Vec<usize> = (0..=opts.n_cycles).step_by(stride).collect();
    if *v.last().unwrap() != opts.n_cycles {
        v.push(opts.n_cycles);
    }
    v
}

/// Repeated cycles on the six cardinal inputs with a tomography snapshot
/// after every `stride` cycles.
pub fn run_repetitive(engine: &QecEngine, opts: &RepetitiveOptions) -> Result<RepetitiveRun> {
    let snaps = snapshot_cycles(opts);
    let frame = Frame::new(engine, &opts.mode)?;
    let n_fock = engine.n_fock();
    let branches = 1usize << engine.policy().layer_count();
    let cycle = engine.cycle_duration();
    // means[s][i] = mean Bloch, vars[s][i] = variance of the measured axis.
    let (means, vars, weights, n_traj) = match opts.engine {
        Engine::Trajectories { n_traj } => {
            if n_traj == 0 {
                return Err(Error::InvalidArgument("at least one trajectory per input is required".into()));
            }
            let jobs: Vec<(usize, usize)> = (0..6).flat_map(|i| (0..n_traj).map(move |j| (i, j))).collect();
            let results = jobs
                .par_iter()
                .map(|&(i, j)| -> Result<(Vec<Bloch>, Vec<usize>)> {
                    let stream = rng::stream_id(&[i as u64, j as u64]);
                    let mut t = Trajectory::new(frame.inputs[i].clone(), opts.seed, stream);
                    if let Some(enc) = &frame.encode {
                        enc.apply_traj(&mut t)?;
                    }
                    let mut counts = vec![0usize; branches];
                    let mut out = Vec::with_capacity(snaps.len());
                    let mut done = 0;
                    for &s in &snaps {
                        while done < s {
                            let rec = engine.run_cycle(&mut t)?;
                            counts[rec.branch()] += 1;
                            done += 1;
                        }
                        out.push(frame.bloch_traj(&t, n_fock)?);
                    }
                    Ok((out, counts))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut means = vec![[[0.0; 3]; 6]; snaps.len()];
            let mut sq = vec![[0.0; 6]; snaps.len()];
            let mut weights = vec![0.0; branches];
            for (&(i, _), (blochs, counts)) in jobs.iter().zip(&results) {
                for (s, b) in blochs.iter().enumerate() {
                    for a in 0..3 {
                        means[s][i][a] += b[a];
                    }
                    sq[s][i] += b[INPUT_AXES[i].0].powi(2);
                }
                for (w, c) in weights.iter_mut().zip(counts) {
                    *w += *c as f64;
                }
            }
            let nf = n_traj as f64;
            let mut vars = vec![[0.0; 6]; snaps.len()];
            for s in 0..snaps.len() {
                for i in 0..6 {
                    for a in 0..3 {
                        means[s][i][a] /= nf;
                    }
                    let m = means[s][i][INPUT_AXES[i].0];
                    vars[s][i] = if n_traj > 1 { (sq[s][i] / nf - m * m).max(0.0) * nf / (nf - 1.0) } else { 0.0 };
                }
            }
            (means, vars, weights, n_traj)
        }
        Engine::MasterEquation => {
            let de = engine.density_engine()?;
            let per_input = (0..6)
                .into_par_iter()
                .map(|i| -> Result<(Vec<Bloch>, Vec<f64>)> {
                    let psi = &frame.inputs[i];
                    let mut rho = psi * psi.adjoint();
                    if let Some(enc) = &frame.encode {
                        rho = enc.apply_rho(&rho);
                    }
                    let mut w = vec![0.0; branches];
                    let mut out = Vec::with_capacity(snaps.len());
                    let mut done = 0;
                    for &s in &snaps {
                        while done < s {
                            let c = de.run_cycle(&rho)?;
                            for (a, b) in w.iter_mut().zip(&c.branch_probabilities) {
                                *a += b;
                            }
                            rho = c.rho;
                            done += 1;
                        }
                        out.push(frame.bloch_rho(&rho, n_fock));
                    }
                    Ok((out, w))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut means = vec![[[0.0; 3]; 6]; snaps.len()];
            let mut weights = vec![0.0; branches];
            for (i, (blochs, w)) in per_input.iter().enumerate() {
                for (s, b) in blochs.iter().enumerate() {
                    means[s][i] = *b;
                }
                for (a, b) in weights.iter_mut().zip(w) {
                    *a += b;
                }
            }
            (means, vec![[0.0; 6]; snaps.len()], weights, 0)
        }
    };
    let mut points = Vec::with_capacity(snaps.len());
    for (s, &k) in snaps.iter().enumerate() {
        let chi = ProcessMatrix::from_cardinal(&means[s])?;
        let var: f64 = if n_traj > 0 { vars[s].iter().sum::<f64>() / (64.0 * n_traj as f64) } else { 0.0 };
        points.push(FidelityPoint {
            cycles: k,
            time: k as f64 * cycle,
            fidelity: chi.identity_fidelity(),
            fidelity_se: var.sqrt(),
            chi,
        });
    }
    let label = format!("{}-layer", engine.policy().layer_count());
    Ok(RepetitiveRun { table: FidelityTable { label, points }, branch_weights: weights, trajectories_per_input: n_traj })
}

/// Unprotected encodings evolving under idle decoherence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Cavity Fock states {|0⟩, |1⟩}: the break-even reference.
    Fock01,
    /// The bare ancilla.
    Transmon,
    /// Binomial codewords without correction.
    UncorrectedBinomial,
}

impl Baseline {
    pub fn label(self) -> &'static str {
        match self {
            Baseline::Fock01 => "fock01",
            Baseline::Transmon => "transmon",
            Baseline::UncorrectedBinomial => "uncorrected-binomial",
        }
    }
}

/// Idle Lindblad evolution of a baseline encoding with tomography at the
/// given times. Cavity encodings are compared against the free Hamiltonian
/// evolution (the deterministic Kerr phase is undone).
pub fn baseline_lifetimes(params: &SystemParams, which: Baseline, times: &[f64]) -> Result<FidelityTable> {
    params.validate()?;
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("baseline times must be finite and non-negative".into()));
    }
    let scaled = |m: CMatrix, rate: f64| m * C64::new(rate.max(0.0).sqrt(), 0.0);
    let (h, ls, b0, b1) = match which {
        Baseline::Transmon => {
            let sm = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), ONE, C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
            let pe = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), ONE]);
            let g = params.gamma_q();
            let ls = vec![
                scaled(sm.clone(), g * (1.0 + params.nth_q)),
                scaled(sm.adjoint(), g * params.nth_q),
                scaled(pe, 2.0 / params.tphi_q),
            ];
            let b0 = CVector::from_vec(vec![ONE, C64::new(0.0, 0.0)]);
            let b1 = CVector::from_vec(vec![C64::new(0.0, 0.0), ONE]);
            (CMatrix::zeros(2, 2), ls, b0, b1)
        }
        Baseline::Fock01 | Baseline::UncorrectedBinomial => {
            let n = if which == Baseline::Fock01 { 6 } else { 12 };
            let code = if which == Baseline::Fock01 { fock01(n)? } else { lowest_order_binomial(n)? };
            let a = annihilation(n)?.into_matrix();
            let num = number(n)?.into_matrix();
            let k = params.kappa_c();
            let ls = vec![
                scaled(a.clone(), k * (1.0 + params.nth_c)),
                scaled(a.adjoint(), k * params.nth_c),
                scaled(num, 2.0 / params.tphi_c),
            ];
            let h = CMatrix::from_diagonal(&CVector::from_fn(n, |i, _| C64::new(params.level_energy(false, i), 0.0)));
            (h, ls, code.codeword(0), code.codeword(1))
        }
    };
    let inputs = cardinal_from_basis(&b0, &b1);
    let points = times
        .par_iter()
        .map(|&t| -> Result<FidelityPoint> {
            let prop = LindbladPropagator::new(&h, &ls, t)?;
            let free = CMatrix::from_diagonal(&h.diagonal().map(|e| C64::from_polar(1.0, e.re * t)));
            let mut outs = [[0.0; 3]; 6];
            for (o, psi) in outs.iter_mut().zip(&inputs) {
                let rho = prop.apply(&(psi * psi.adjoint()));
                *o = bloch_on_density(&(&free * rho * free.adjoint()), &b0, &b1);
            }
            let chi = ProcessMatrix::from_cardinal(&outs)?;
            Ok(FidelityPoint { cycles: 0, time: t, fidelity: chi.identity_fidelity(), fidelity_se: 0.0, chi })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityTable { label: which.label().to_string(), points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t_wait: f64,
    pub cycle_duration: f64,
    /// `None` when the decay could not be fitted (reason in `fit_error`).
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub table: FidelityTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub points: Vec<SweepPoint>,
    /// Index of the longest fitted lifetime.
    pub best: usize,
}

impl SweepTable {
    /// CSV with columns t_wait_us, cycle_us, lifetime_us, lifetime_se_us,
    /// amplitude; unfitted points have empty fit columns.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "t_wait_us,cycle_us,lifetime_us,lifetime_se_us,amplitude")?;
        for p in &self.points {
            write!(w, "{:.11e},{:.11e},", p.t_wait * 1e6, p.cycle_duration * 1e6)?;
            match &p.fit {
                Some(f) => writeln!(w, "{:.11e},{:.11e},{:.11e}", f.lifetime * 1e6, f.lifetime_se * 1e6, f.amplitude)?,
                None => writeln!(w, ",,")?,
            }
        }
        Ok(())
    }
}

/// Fitted lifetime as a function of the waiting time.
///
/// Each grid point simulates about `window` seconds of repeated cycles,
/// clamped to between 3 and `opts.n_cycles` cycles, so every decay is
/// sampled over a comparable fraction of its lifetime. Points whose decay
/// cannot be fitted are kept with `fit = None`; it is an error only if no
/// point fits.
pub fn sweep_waiting_time(
    template: &QecCycleConfig,
    policy: &FeedbackPolicy,
    grid: &[f64],
    window: f64,
    opts: &RepetitiveOptions,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("waiting-time grid is empty".into()));
    }
    if !(window > 0.0) || opts.n_cycles < 3 {
        return Err(Error::InvalidArgument(format!(
            "sweep needs a positive window and at least 3 cycles, got {window:e} s and {}",
            opts.n_cycles
        )));
    }
    let mut points = Vec::with_capacity(grid.len());
    for (g, &t_wait) in grid.iter().enumerate() {
        let config = QecCycleConfig { t_wait, ..template.clone() };
        let engine = QecEngine::new(config, policy.clone())?;
        let n_cycles = ((window / engine.cycle_duration()).round() as usize).clamp(3, opts.n_cycles);
        let point_opts = RepetitiveOptions {
            n_cycles,
            stride: opts.stride.min(n_cycles),
            seed: opts.seed.wrapping_add(g as u64),
            ..opts.clone()
        };
        let run = run_repetitive(&engine, &point_opts)?;
        let (fit, fit_error) = match run.table.fit() {
            Ok(f) => {
                log::info!("t_wait = {:.1} µs: τ = {:.1} ± {:.1} µs", t_wait * 1e6, f.lifetime * 1e6, f.lifetime_se * 1e6);
                (Some(f), None)
            }
            Err(e) => {
                log::warn!("t_wait = {:.1} µs: {e}", t_wait * 1e6);
                (None, Some(e.to_string()))
            }
        };
        points.push(SweepPoint { t_wait, cycle_duration: engine.cycle_duration(), fit, fit_error, table: run.table });
    }
    let best = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.fit.as_ref().map(|f| (i, f.lifetime)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Fit { reason: "no waiting time produced a fittable decay".into(), residual_norm: f64::NAN })?;
    Ok(SweepTable { points, best })
}

/// One cycle per trajectory on every cardinal input, tagged by reported
/// branch. The error of a sample is 2(1 − F), with F the state fidelity of
/// the logical output (leaked weight counted as maximally mixed); averaged
/// over the cardinal inputs it equals the normalized process infidelity.
pub fn branch_samples(engine: &QecEngine, n_traj: usize, seed: u64) -> Result<Vec<BranchSample>> {
    let [c0, c1] = engine.codewords().clone();
    let inputs = cardinal_from_basis(&c0, &c1);
    let jobs: Vec<(usize, usize)> = (0..6).flat_map(|i| (0..n_traj).map(move |j| (i, j))).collect();
    jobs.par_iter()
        .map(|&(i, j)| -> Result<BranchSample> {
            let mut t = Trajectory::new(inputs[i].clone(), seed, rng::stream_id(&[i as u64, j as u64]));
            let rec = engine.run_cycle(&mut t)?;
            let psi = t.state();
            let p_code = c0.dotc(&psi).norm_sqr() + c1.dotc(&psi).norm_sqr();
            let f = inputs[i].dotc(&psi).norm_sqr() + 0.5 * (1.0 - p_code);
            Ok(BranchSample { branch: rec.branch(), error: 2.0 * (1.0 - f) })
        })
        .collect()
}
