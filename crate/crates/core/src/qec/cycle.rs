// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! A compiled QEC cycle, run either on quantum-jump trajectories or on
//! density matrices.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    tomography::{bloch_on, bloch_on_density, Bloch},
    Action, ActionTiming, FeedbackPolicy, Gate, ParityMap, PassModel, QecCycleConfig, Role,
};
use crate::budget::thermal_error;
use crate::code::{lowest_order_binomial, pass_effective_hamiltonian};
use crate::comb::{comb_schedule, frame_hamiltonian, frame_return};
use crate::dynamics::{measure_ancilla_density, CompiledSchedule, MeProgram, PiecewisePulse, Schedule, Trajectory};
use crate::quantum::{completed_isometry, CMatrix, CVector, Operator, Qubit, Space, C64, I, ONE};
use crate::system::{cavity_a, collapse_operators_with, control_operators, dispersive_hamiltonian, qubit_lower};
use crate::{Error, Result};

/// Longest trajectory step inside long constant segments.
const MAX_STEP: f64 = 1e-6;
/// Density-matrix segments at least this long use the exact propagator.
const EXACT_THRESHOLD: f64 = 50e-9;
/// Segment length of the PASS ramps.
const RAMP_STEP: f64 = 10e-9;
/// Population in the top two Fock levels that aborts a trajectory.
const TRUNCATION_ABORT: f64 = 1e-3;

#[derive(Clone, Debug)]
struct Stage {
    schedule: Schedule,
    traj: CompiledSchedule,
}

impl Stage {
    fn new(schedule: Schedule, collapse: &[Operator]) -> Result<Self> {
        let traj = CompiledSchedule::new(&schedule, collapse, MAX_STEP)?;
        Ok(Self { schedule, traj })
    }

    fn me(&self, collapse: &[CMatrix]) -> Result<MeProgram> {
        MeProgram::compile(&self.schedule, collapse, EXACT_THRESHOLD)
    }
}

fn idle(h: &CMatrix, duration: f64) -> Result<Schedule> {
    let mut s = Schedule::new(h.nrows());
    if duration > 0.0 {
        s.push(h.clone(), duration)?;
    }
    Ok(s)
}

fn pulse_schedule(pulse: &PiecewisePulse, h0: &CMatrix, controls: &[CMatrix; 4]) -> Result<Schedule> {
    let mut s = Schedule::new(h0.nrows());
    for k in 0..pulse.n_segments() {
        s.push(pulse.segment_hamiltonian(h0, controls, k), pulse.dt())?;
    }
    Ok(s)
}

#[derive(Clone, Debug)]
enum CompiledGate {
    Dense(CMatrix),
    Pulse(Stage),
}

#[derive(Clone, Debug)]
enum ParityStage {
    Comb(Stage),
    Ideal { flip: CMatrix, idle: Stage },
}

#[derive(Clone, Debug)]
struct BranchProgram {
    pre: Stage,
    post: Stage,
}

/// Reported and true ancilla outcomes of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerOutcome {
    pub reported: Qubit,
    pub truth: Qubit,
}

/// Outcomes of one cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub layers: Vec<LayerOutcome>,
    /// Number of injected non-identity logical Paulis.
    pub injected_paulis: usize,
}

impl CycleRecord {
    /// Branch index with the first layer as the most significant bit (0 = g).
    pub fn branch(&self) -> usize {
        self.layers.iter().fold(0, |b, l| (b << 1) | l.reported.index())
    }
}

/// A QEC cycle compiled for a given configuration and feedback policy.
#[derive(Clone, Debug)]
pub struct QecEngine {
    config: QecCycleConfig,
    policy: FeedbackPolicy,
    space: Space,
    n_fock: usize,
    h0: CMatrix,
    controls: [CMatrix; 4],
    collapse: Vec<Operator>,
    wait: [Stage; 2],
    wait_frame: Option<CMatrix>,
    parity: ParityStage,
    readout: Stage,
    latency: Stage,
    branches: Vec<[BranchProgram; 2]>,
    reset: CMatrix,
    loss: CMatrix,
    codewords: [CVector; 2],
    logical_paulis: [CMatrix; 3],
    gates: BTreeMap<Role, CompiledGate>,
    /// (sources, targets) each ideal role was calibrated from.
    transfers: BTreeMap<Role, (Vec<CVector>, Vec<CVector>)>,
    cycle_thermal: f64,
}

impl QecEngine {
    pub fn new(config: QecCycleConfig, policy: FeedbackPolicy) -> Result<Self> {
        config.validate(&policy)?;
        let n = config.n_fock;
        let space = Space::qubit_cavity(n)?;
        let p = &config.params;
        let h0 = dispersive_hamiltonian(p, &space)?.into_matrix();
        let controls = control_operators(&space)?;
        let collapse = collapse_operators_with(p, &space, config.noise)?;
        let sx = {
            let sp = qubit_lower(&space)?.dagger().into_matrix();
            &sp + sp.adjoint()
        };

        // Wait, split in two halves around the forced-jump point of the references.
        let half = 0.5 * config.t_wait;
        let (wait_a, wait_b, wait_frame) = match &config.pass {
            None => (idle(&h0, half)?, idle(&h0, half)?, None),
            Some(drive) => match drive.model {
                PassModel::Effective => {
                    let h = pass_effective_hamiltonian(p, &drive.calibration, &space)?;
                    (idle(&h, half)?, idle(&h, half)?, None)
                }
                PassModel::Driven { ramp } => {
                    let delta = drive.calibration.detuning;
                    let amp = drive.calibration.amplitude;
                    let hf = frame_hamiltonian(p, &space, delta)?;
                    let steps = (ramp / RAMP_STEP).ceil().max(1.0) as usize;
                    let dt = ramp / steps as f64;
                    let env = |k: usize| 0.5 * (1.0 - (std::f64::consts::PI * (k as f64 + 0.5) / steps as f64).cos());
                    let plateau = 0.5 * (config.t_wait - 2.0 * ramp);
                    let h_on = &hf + &sx * C64::new(amp, 0.0);
                    let mut a = Schedule::new(space.dim());
                    for k in 0..steps {
                        a.push(&hf + &sx * C64::new(amp * env(k), 0.0), dt)?;
                    }
                    a.push(h_on.clone(), plateau)?;
                    let mut b = Schedule::new(space.dim());
                    b.push(h_on, plateau)?;
                    for k in (0..steps).rev() {
                        b.push(&hf + &sx * C64::new(amp * env(k), 0.0), dt)?;
                    }
                    (a, b, Some(frame_return(&space, delta, config.t_wait)?))
                }
            },
        };
        let wait = [Stage::new(wait_a, &collapse)?, Stage::new(wait_b, &collapse)?];

        let parity = match config.parity_map {
            ParityMap::Comb => {
                ParityStage::Comb(Stage::new(comb_schedule(&config.comb, p, &space, config.comb_dt)?, &collapse)?)
            }
            ParityMap::Ideal => {
                let mut flip = CMatrix::zeros(2 * n, 2 * n);
                for k in 0..n {
                    if k % 2 == 0 {
                        flip[(k, k)] = ONE;
                        flip[(n + k, n + k)] = ONE;
                    } else {
                        flip[(n + k, k)] = ONE;
                        flip[(k, n + k)] = ONE;
                    }
                }
                ParityStage::Ideal { flip, idle: Stage::new(idle(&h0, config.comb.duration)?, &collapse)? }
            }
        };
        let readout = Stage::new(idle(&h0, config.readout.duration)?, &collapse)?;
        let latency = Stage::new(idle(&h0, config.latency)?, &collapse)?;

        let mut gates = BTreeMap::new();
        for (role, gate) in &config.recoveries {
            if let Gate::Pulse(pulse) = gate {
                gates.insert(*role, CompiledGate::Pulse(Stage::new(pulse_schedule(pulse, &h0, &controls)?, &collapse)?));
            }
        }
        let pad = config.reset_duration + config.recovery_duration + config.extra_idle;
        let mut branches = Vec::new();
        for layer in 0..policy.layer_count() {
            let mk = |q: Qubit| -> Result<BranchProgram> {
                let pulse_time: f64 = policy
                    .actions(layer, q)
                    .iter()
                    .map(|a| match (a, a_role(a).and_then(|r| config.recoveries.get(&r))) {
                        (Action::Apply(_), Some(Gate::Pulse(pl))) => pl.duration(),
                        _ => 0.0,
                    })
                    .sum();
                let rest = pad - pulse_time;
                if rest < -1e-15 {
                    return Err(Error::Config(format!(
                        "recovery pulses of layer {layer}, outcome {q} ({pulse_time:e} s) exceed the {pad:e} s slot"
                    )));
                }
                let rest = rest.max(0.0);
                let (pre, post) = match config.action_timing {
                    ActionTiming::AfterLatency => (0.0, rest),
                    ActionTiming::EndOfSlot => (rest, 0.0),
                };
                Ok(BranchProgram { pre: Stage::new(idle(&h0, pre)?, &collapse)?, post: Stage::new(idle(&h0, post)?, &collapse)? })
            };
            branches.push([mk(Qubit::G)?, mk(Qubit::E)?]);
        }

        let reset = {
            let mut m = CMatrix::zeros(2 * n, 2 * n);
            for k in 0..n {
                m[(k, n + k)] = ONE;
                m[(n + k, k)] = ONE;
            }
            m
        };
        let loss = cavity_a(&space)?.into_matrix();
        let code = lowest_order_binomial(n)?;
        let embed = |c: CVector| {
            let mut v = CVector::zeros(2 * n);
            v.rows_mut(0, n).copy_from(&c);
            v
        };
        let codewords = [embed(code.codeword(0)), embed(code.codeword(1))];
        let logical_paulis = {
            let (c0, c1) = (&codewords[0], &codewords[1]);
            let p00 = c0 * c0.adjoint();
            let p11 = c1 * c1.adjoint();
            let p01 = c0 * c1.adjoint();
            let p10 = c1 * c0.adjoint();
            let rest = CMatrix::identity(2 * n, 2 * n) - &p00 - &p11;
            [&p01 + &p10 + &rest, &p01 * -I + &p10 * I + &rest, &p00 - &p11 + &rest]
        };
        let cycle_thermal = match &config.injected {
            Some(inj) if inj.thermal => thermal_error(p.nth_q, config.cycle_duration(), p.t1_q)?,
            _ => 0.0,
        };
        let mut engine = Self {
            config,
            policy,
            space,
            n_fock: n,
            h0,
            controls,
            collapse,
            wait,
            wait_frame,
            parity,
            readout,
            latency,
            branches,
            reset,
            loss,
            codewords,
            logical_paulis,
            gates,
            transfers: BTreeMap::new(),
            cycle_thermal,
        };
        engine.calibrate()?;
        Ok(engine)
    }

    pub fn config(&self) -> &QecCycleConfig {
        &self.config
    }

    pub fn policy(&self) -> &FeedbackPolicy {
        &self.policy
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    /// Drift Hamiltonian and control operators used for pulse gates.
    pub fn drift_and_controls(&self) -> (&CMatrix, &[CMatrix; 4]) {
        (&self.h0, &self.controls)
    }

    pub fn collapse(&self) -> &[Operator] {
        &self.collapse
    }

    /// |g⟩ ⊗ |0_L⟩ and |g⟩ ⊗ |1_L⟩.
    pub fn codewords(&self) -> &[CVector; 2] {
        &self.codewords
    }

    /// Logical X, Y, Z on the code space, identity on its complement.
    pub fn logical_paulis(&self) -> &[CMatrix; 3] {
        &self.logical_paulis
    }

    pub fn cycle_duration(&self) -> f64 {
        self.config.cycle_duration()
    }

    /// The calibrated unitary of an ideal recovery role.
    /// Reference states an ideal role maps between: (sources, targets).
    pub fn recovery_transfers(&self, role: Role) -> Option<(&[CVector], &[CVector])> {
        self.transfers.get(&role).map(|(s, t)| (s.as_slice(), t.as_slice()))
    }

    pub fn recovery_unitary(&self, role: Role) -> Option<&CMatrix> {
        match self.gates.get(&role) {
            Some(CompiledGate::Dense(u)) => Some(u),
            _ => None,
        }
    }

    /// Logical Bloch vector of a state (leaked weight shortens it).
    pub fn logical_bloch(&self, psi: &CVector) -> Bloch {
        bloch_on(psi, &self.codewords[0], &self.codewords[1])
    }

    pub fn logical_bloch_density(&self, rho: &CMatrix) -> Bloch {
        bloch_on_density(rho, &self.codewords[0], &self.codewords[1])
    }

    fn parity_evolve(&self, t: &mut Trajectory) -> Result<()> {
        match &self.parity {
            ParityStage::Comb(s) => t.evolve(&s.traj),
            ParityStage::Ideal { flip, idle } => {
                t.apply_dense(flip);
                t.evolve(&idle.traj)
            }
        }
    }

    fn wait_evolve(&self, t: &mut Trajectory, forced_jump: bool) -> Result<()> {
        t.evolve(&self.wait[0].traj)?;
        if forced_jump {
            t.force_jump(&self.loss, "a")?;
        }
        t.evolve(&self.wait[1].traj)?;
        if let Some(f) = &self.wait_frame {
            t.apply_dense(f);
        }
        Ok(())
    }

    /// Deterministic evolution of one layer up to the first recovery role of
    /// the branch, with an optional photon loss at mid-wait and the ancilla
    /// projected onto the corresponding outcome.
    fn reference(&self, layer: usize, psi: &CVector, jump: bool) -> Result<(CVector, Option<Role>)> {
        let mut t = Trajectory::without_jumps(psi.clone());
        self.wait_evolve(&mut t, jump)?;
        self.parity_evolve(&mut t)?;
        let q = if jump { Qubit::E } else { Qubit::G };
        t.project_ancilla(self.n_fock, q)?;
        t.evolve(&self.readout.traj)?;
        t.evolve(&self.latency.traj)?;
        let br = &self.branches[layer][q.index()];
        t.evolve(&br.pre.traj)?;
        for a in self.policy.actions(layer, q) {
            match a {
                Action::ResetPi => t.apply_dense(&self.reset),
                Action::Apply(r) => return Ok((t.state(), Some(*r))),
            }
        }
        Ok((t.state(), None))
    }

    /// Continue a no-jump reference through the remaining actions and padding.
    fn finish_reference(&self, layer: usize, q: Qubit, psi: &CVector) -> Result<CVector> {
        let mut t = Trajectory::without_jumps(psi.clone());
        for a in self.policy.actions(layer, q) {
            match a {
                Action::ResetPi => {}
                Action::Apply(r) => self.apply_gate(&mut t, *r)?,
            }
        }
        t.evolve(&self.branches[layer][q.index()].post.traj)?;
        Ok(t.state())
    }

    fn apply_gate(&self, t: &mut Trajectory, role: Role) -> Result<()> {
        match self.gates.get(&role) {
            Some(CompiledGate::Dense(u)) => {
                t.apply_dense(u);
                Ok(())
            }
            Some(CompiledGate::Pulse(s)) => t.evolve(&s.traj),
            None => Err(Error::MissingRole(role.to_string())),
        }
    }

    /// Calibrate every ideal role from reference evolutions of the codewords.
    ///
    /// In the last layer a role maps its branch's references onto the
    /// codewords (pre-compensating the Hamiltonian part of the remaining
    /// padding). In an earlier layer the error-branch role maps onto the
    /// no-error branch references, i.e. back into the deformed code space.
    fn calibrate(&mut self) -> Result<()> {
        let layers = self.policy.layer_count();
        let ideal: Vec<Role> = self
            .config
            .recoveries
            .iter()
            .filter(|(r, g)| matches!(g, Gate::Ideal) && self.policy.roles().contains(r))
            .map(|(r, _)| *r)
            .collect();
        let mut pending: BTreeMap<Role, CMatrix> = BTreeMap::new();
        let mut inputs: Vec<CVector> = self.codewords.to_vec();
        for layer in 0..layers {
            let last = layer + 1 == layers;
            let refs_g = inputs.iter().map(|c| self.reference(layer, c, false)).collect::<Result<Vec<_>>>()?;
            let refs_e = inputs.iter().map(|c| self.reference(layer, c, true)).collect::<Result<Vec<_>>>()?;
            for (q, refs) in [(Qubit::G, &refs_g), (Qubit::E, &refs_e)] {
                let Some(role) = refs[0].1 else { continue };
                if !ideal.contains(&role) || pending.contains_key(&role) {
                    continue;
                }
                let sources: Vec<CVector> = refs.iter().map(|r| r.0.clone()).collect();
                let targets: Vec<CVector> = if last {
                    let u_post = self.branches[layer][q.index()].post.schedule.unitary()?;
                    self.codewords.iter().map(|c| u_post.adjoint() * c).collect()
                } else if q == Qubit::E && refs_g[0].1.is_none() {
                    refs_g.iter().map(|r| r.0.clone()).collect()
                } else {
                    return Err(Error::Calibration(format!(
                        "role {role} in layer {} has no ideal calibration target",
                        layer + 1
                    )));
                };
                let u = completed_isometry(&sources, &targets)?;
                self.transfers.insert(role, (sources, targets));
                pending.insert(role, u.clone());
                self.gates.insert(role, CompiledGate::Dense(u));
            }
            if !last {
                inputs = refs_g
                    .iter()
                    .map(|(s, _)| self.finish_reference(layer, Qubit::G, s))
                    .collect::<Result<Vec<_>>>()?;
            }
        }
        for role in self.policy.roles() {
            if !self.gates.contains_key(&role) {
                return Err(Error::Calibration(format!("role {role} is never reached by the policy")));
            }
        }
        Ok(())
    }

    /// Logical error probabilities injected after a layer with this outcome.
    fn layer_errors(&self, layer: usize, reported: Qubit) -> Vec<f64> {
        let Some(inj) = &self.config.injected else { return Vec::new() };
        let mut out = Vec::new();
        if self.config.pass.is_some() {
            out.push(inj.pass_allowance);
        }
        out.push(inj.operations.detection[reported.index()]);
        for a in self.policy.actions(layer, reported) {
            out.push(match a {
                Action::ResetPi => inj.operations.reset,
                Action::Apply(r) => inj.operations.recovery[r.index()],
            });
        }
        out
    }

    fn depolarize_trajectory(&self, t: &mut Trajectory, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        let hit = t.rng().random::<f64>() < p;
        if !hit {
            return false;
        }
        let k = t.rng().random_range(0..4usize);
        if k == 0 {
            return false;
        }
        let m = self.logical_paulis[k - 1].clone();
        t.apply_dense(&m);
        true
    }

    fn depolarize_density(&self, rho: &CMatrix, p: f64) -> CMatrix {
        if p <= 0.0 {
            return rho.clone();
        }
        let mut out = rho * C64::new(1.0 - 0.75 * p, 0.0);
        for s in &self.logical_paulis {
            out += s * rho * s * C64::new(0.25 * p, 0.0);
        }
        out
    }

    fn check_truncation(&self, psi: &CVector, time: f64) -> Result<()> {
        let n = self.n_fock;
        let tail: f64 = [n - 2, n - 1, 2 * n - 2, 2 * n - 1].iter().map(|&i| psi[i].norm_sqr()).sum::<f64>()
            / psi.norm_squared();
        if tail > TRUNCATION_ABORT {
            return Err(Error::Numeric(format!(
                "truncation overflow: population {tail:.3e} in the top two of {n} Fock levels at t = {time:.6e} s"
            )));
        }
        Ok(())
    }

    /// Run one cycle on a trajectory.
    pub fn run_cycle(&self, t: &mut Trajectory) -> Result<CycleRecord> {
        let mut rec = CycleRecord { layers: Vec::with_capacity(self.policy.layer_count()), injected_paulis: 0 };
        for layer in 0..self.policy.layer_count() {
            self.wait_evolve(t, false)?;
            self.parity_evolve(t)?;
            let (reported, truth) = t.measure_ancilla(self.n_fock, &self.config.readout, Some(&self.readout.traj))?;
            t.evolve(&self.latency.traj)?;
            let br = &self.branches[layer][reported.index()];
            t.evolve(&br.pre.traj)?;
            for a in self.policy.actions(layer, reported) {
                match a {
                    Action::ResetPi => t.apply_dense(&self.reset),
                    Action::Apply(r) => self.apply_gate(t, *r)?,
                }
            }
            t.evolve(&br.post.traj)?;
            t.renormalize();
            for p in self.layer_errors(layer, reported) {
                rec.injected_paulis += self.depolarize_trajectory(t, p) as usize;
            }
            rec.layers.push(LayerOutcome { reported, truth });
        }
        rec.injected_paulis += self.depolarize_trajectory(t, self.cycle_thermal) as usize;
        let psi = t.state();
        self.check_truncation(&psi, t.time())?;
        Ok(rec)
    }

    /// Compile the cycle for density-matrix evolution.
    pub fn density_engine(&self) -> Result<DensityEngine<'_>> {
        let ls: Vec<CMatrix> = self.collapse.iter().map(|l| l.matrix().clone()).collect();
        let mut wait = self.wait[0].schedule.clone();
        wait.extend(&self.wait[1].schedule)?;
        let parity = match &self.parity {
            ParityStage::Comb(s) => s.me(&ls)?,
            ParityStage::Ideal { idle, .. } => idle.me(&ls)?,
        };
        let branches = self
            .branches
            .iter()
            .map(|b| -> Result<[(MeProgram, MeProgram); 2]> {
                Ok([(b[0].pre.me(&ls)?, b[0].post.me(&ls)?), (b[1].pre.me(&ls)?, b[1].post.me(&ls)?)])
            })
            .collect::<Result<Vec<_>>>()?;
        let mut pulses = BTreeMap::new();
        for (r, g) in &self.gates {
            if let CompiledGate::Pulse(s) = g {
                pulses.insert(*r, s.me(&ls)?);
            }
        }
        Ok(DensityEngine {
            engine: self,
            wait: MeProgram::compile(&wait, &ls, EXACT_THRESHOLD)?,
            parity,
            readout: self.readout.me(&ls)?,
            latency: self.latency.me(&ls)?,
            branches,
            pulses,
        })
    }
}

fn a_role(a: &Action) -> Option<Role> {
    match a {
        Action::Apply(r) => Some(*r),
        Action::ResetPi => None,
    }
}

/// Output of a density-matrix cycle.
#[derive(Clone, Debug)]
pub struct DensityCycle {
    pub rho: CMatrix,
    /// Probability of each reported-outcome branch (first layer most significant).
    pub branch_probabilities: Vec<f64>,
}

/// Master-equation form of a compiled cycle.
pub struct DensityEngine<'a> {
    engine: &'a QecEngine,
    wait: MeProgram,
    parity: MeProgram,
    readout: MeProgram,
    latency: MeProgram,
    branches: Vec<[(MeProgram, MeProgram); 2]>,
    pulses: BTreeMap<Role, MeProgram>,
}

impl DensityEngine<'_> {
    pub fn engine(&self) -> &QecEngine {
        self.engine
    }

    fn layer(&self, layer: usize, rho: &CMatrix, branch: usize, out: &mut Vec<(usize, CMatrix)>) -> Result<()> {
        let e = self.engine;
        let mut r = self.wait.apply(rho);
        if let Some(f) = &e.wait_frame {
            r = f * r * f.adjoint();
        }
        if let ParityStage::Ideal { flip, .. } = &e.parity {
            r = flip * r * flip.adjoint();
        }
        r = self.parity.apply(&r);
        for b in measure_ancilla_density(&r, e.n_fock, &e.config.readout) {
            let q = b.reported;
            let (pre, post) = &self.branches[layer][q.index()];
            let mut x = pre.apply(&self.latency.apply(&self.readout.apply(&b.rho)));
            for a in e.policy.actions(layer, q) {
                x = match a {
                    Action::ResetPi => &e.reset * x * &e.reset,
                    Action::Apply(role) => match (e.gates.get(role), self.pulses.get(role)) {
                        (Some(CompiledGate::Dense(u)), _) => u * x * u.adjoint(),
                        (_, Some(p)) => p.apply(&x),
                        _ => return Err(Error::MissingRole(role.to_string())),
                    },
                };
            }
            x = post.apply(&x);
            for p in e.layer_errors(layer, q) {
                x = e.depolarize_density(&x, p);
            }
            let b_idx = (branch << 1) | q.index();
            if layer + 1 < e.policy.layer_count() {
                self.layer(layer + 1, &x, b_idx, out)?;
            } else {
                out.push((b_idx, x));
            }
        }
        Ok(())
    }

    /// Run one cycle on a density matrix; branches are summed.
    pub fn run_cycle(&self, rho: &CMatrix) -> Result<DensityCycle> {
        let e = self.engine;
        let mut parts = Vec::new();
        self.layer(0, rho, 0, &mut parts)?;
        let mut probs = vec![0.0; 1 << e.policy.layer_count()];
        let d = rho.nrows();
        let mut total = CMatrix::zeros(d, d);
        for (b, x) in &parts {
            probs[*b] += x.trace().re;
            total += x;
        }
        let total = e.depolarize_density(&total, e.cycle_thermal);
        Ok(DensityCycle { rho: total, branch_probabilities: probs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Layers;
    use crate::code::cardinal_from_basis;
    use crate::system::{NoiseChannels, SystemParams};

    fn ideal_engine(layers: Layers) -> QecEngine {
        let c = QecCycleConfig::ideal(SystemParams::reference(), layers).unwrap();
        QecEngine::new(c, FeedbackPolicy::default_for(layers)).unwrap()
    }

    #[test]
    fn ideal_cycle_is_a_fixed_point() {
        for layers in [Layers::One, Layers::Two] {
            let e = ideal_engine(layers);
            let [c0, c1] = e.codewords().clone();
            for (k, psi) in cardinal_from_basis(&c0, &c1).into_iter().enumerate() {
                let mut t = Trajectory::new(psi.clone(), 3, k as u64);
                for _ in 0..5 {
                    let rec = e.run_cycle(&mut t).unwrap();
                    assert!(rec.layers.iter().all(|l| l.reported == Qubit::G));
                }
                let f = psi.dotc(&t.state()).norm_sqr();
                assert!((1.0 - f).abs() < 1e-8, "{layers:?} input {k}: fidelity {f}");
            }
        }
    }

    #[test]
    fn forced_jump_is_corrected_with_kerr_only() {
        // Kerr-only dynamics, effective PASS, exact parity map.
        let e = ideal_engine(Layers::One);
        let [c0, c1] = e.codewords().clone();
        for (k, psi) in cardinal_from_basis(&c0, &c1).into_iter().enumerate() {
            let mut t = Trajectory::without_jumps(psi.clone());
            t.evolve(&e.wait[0].traj).unwrap();
            t.force_jump(&e.loss, "a").unwrap();
            t.evolve(&e.wait[1].traj).unwrap();
            e.parity_evolve(&mut t).unwrap();
            let (rep, _) = t.measure_ancilla(e.n_fock, &e.config.readout, Some(&e.readout.traj)).unwrap();
            assert_eq!(rep, Qubit::E);
            t.evolve(&e.latency.traj).unwrap();
            t.apply_dense(&e.reset);
            e.apply_gate(&mut t, Role::U1).unwrap();
            t.evolve(&e.branches[0][1].post.traj).unwrap();
            let f = psi.dotc(&t.state()).norm_sqr();
            assert!(f > 0.98, "input {k}: fidelity {f}");
        }
    }

    #[test]
    fn jump_time_does_not_matter_with_pass() {
        // Loss at a quarter of the wait instead of the middle still recovers.
        let e = ideal_engine(Layers::One);
        let [c0, c1] = e.codewords().clone();
        let psi = (&c0 + &c1) * C64::new(0.5f64.sqrt(), 0.0);
        let h = pass_effective_hamiltonian(&e.config.params, &e.config.pass.as_ref().unwrap().calibration, &e.space)
            .unwrap();
        let quarter = CompiledSchedule::new(&idle(&h, 0.25 * e.config.t_wait).unwrap(), &[], MAX_STEP).unwrap();
        let three = CompiledSchedule::new(&idle(&h, 0.75 * e.config.t_wait).unwrap(), &[], MAX_STEP).unwrap();
        let mut t = Trajectory::without_jumps(psi.clone());
        t.evolve(&quarter).unwrap();
        t.force_jump(&e.loss, "a").unwrap();
        t.evolve(&three).unwrap();
        e.parity_evolve(&mut t).unwrap();
        t.project_ancilla(e.n_fock, Qubit::E).unwrap();
        t.evolve(&e.readout.traj).unwrap();
        t.evolve(&e.latency.traj).unwrap();
        t.apply_dense(&e.reset);
        e.apply_gate(&mut t, Role::U1).unwrap();
        t.evolve(&e.branches[0][1].post.traj).unwrap();
        let f = psi.dotc(&t.state()).norm_sqr();
        assert!(f > 0.98, "fidelity {f}");
    }

    #[test]
    fn density_cycle_preserves_trace() {
        let mut c = QecCycleConfig::full(SystemParams::reference(), Layers::One).unwrap();
        c.injected = Some(super::super::InjectedErrors::default());
        let e = QecEngine::new(c, FeedbackPolicy::default_for(Layers::One)).unwrap();
        let de = e.density_engine().unwrap();
        let psi = &e.codewords()[0];
        let rho = psi * psi.adjoint();
        let out = de.run_cycle(&rho).unwrap();
        assert!((out.rho.trace().re - 1.0).abs() < 1e-8);
        assert!((out.branch_probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn outcomes_are_deterministic_per_seed() {
        let c = QecCycleConfig::budget_matched(SystemParams::reference(), Layers::Two).unwrap();
        let e = QecEngine::new(c, FeedbackPolicy::default_for(Layers::Two)).unwrap();
        let run = |seed| {
            let mut t = Trajectory::new(e.codewords()[1].clone(), seed, 0);
            (0..6).map(|_| e.run_cycle(&mut t).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn missing_pass_still_runs() {
        let mut c = QecCycleConfig::ideal(SystemParams::reference(), Layers::One).unwrap();
        c.pass = None;
        c.noise = NoiseChannels::CAVITY_DECAY;
        let e = QecEngine::new(c, FeedbackPolicy::default_for(Layers::One)).unwrap();
        let mut t = Trajectory::new(e.codewords()[0].clone(), 1, 0);
        e.run_cycle(&mut t).unwrap();
    }
}
