// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Quantum-jump unraveling.
//!
//! Between jumps the unnormalized state evolves under H_eff = H − (i/2)ΣL†L.
//! A jump fires when ‖ψ‖² falls to a uniform random threshold r; the jump time
//! is located by bisection to 1/128 of the current step, the jump operator is
//! chosen with weights ‖L_j ψ‖², and a fresh threshold is drawn.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::quantum::block::Partition;
use crate::quantum::{expm, BlockOp, CMatrix, CVector, Operator, Qubit, StateVector, C64};
use crate::rng::{self, Rng};
use crate::{Error, Result};

use super::lindblad::effective_hamiltonian;
use super::measurement::{ancilla_prob, project};
use super::{MeasurementModel, Schedule};

const BISECTION_STEPS: usize = 7;
const NORM_FLOOR: f64 = 1e-280;

#[derive(Clone, Debug)]
struct Step {
    heff: BlockOp,
    prop: BlockOp,
    dt: f64,
    repeats: usize,
}

impl Step {
    fn partial(&self, t: f64) -> Result<BlockOp> {
        self.heff.try_map(|b| expm(&(b * C64::new(0.0, -t))))
    }
}

#[derive(Clone, Debug)]
enum Chunk {
    /// A long segment split into equal steps.
    Long(Step),
    /// Consecutive short segments with their combined no-jump propagator.
    Run { combined: BlockOp, steps: Vec<Step> },
}

/// A schedule compiled for quantum-jump trajectories.
#[derive(Clone, Debug)]
pub struct CompiledSchedule {
    dim: usize,
    duration: f64,
    chunks: Vec<Chunk>,
    jumps: Vec<(String, CMatrix)>,
}

impl CompiledSchedule {
    /// Segments longer than `max_step` are split into steps of at most that length.
    pub fn new(schedule: &Schedule, collapse: &[Operator], max_step: f64) -> Result<Self> {
        let dim = schedule.dim();
        let ls: Vec<CMatrix> = collapse.iter().map(|l| l.matrix().clone()).collect();
        let heffs: Vec<CMatrix> = schedule.segments().iter().map(|s| effective_hamiltonian(&s.h, &ls)).collect();
        let mut chunks = Vec::new();
        let segs = schedule.segments();
        let mut i = 0;
        while i < segs.len() {
            if segs[i].duration > max_step {
                let repeats = (segs[i].duration / max_step).ceil() as usize;
                let dt = segs[i].duration / repeats as f64;
                let p = Partition::from_patterns(&[&heffs[i]], 0.0);
                chunks.push(Chunk::Long(make_step(&heffs[i], &p, dt, repeats)?));
                i += 1;
                continue;
            }
            let start = i;
            while i < segs.len() && segs[i].duration <= max_step {
                i += 1;
            }
            let run: Vec<&CMatrix> = heffs[start..i].iter().collect();
            let p = Partition::from_patterns(&run, 0.0);
            let steps = (start..i)
                .map(|k| make_step(&heffs[k], &p, segs[k].duration, 1))
                .collect::<Result<Vec<_>>>()?;
            let mut combined = BlockOp::with_partition(&CMatrix::identity(dim, dim), &p);
            for s in &steps {
                combined = s.prop.compose(&combined).expect("shared partition");
            }
            chunks.push(Chunk::Run { combined, steps });
        }
        let jumps = collapse.iter().map(|l| (l.label().to_string(), l.matrix().clone())).collect();
        Ok(Self { dim, duration: schedule.duration(), chunks, jumps })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn make_step(heff: &CMatrix, p: &Partition, dt: f64, repeats: usize) -> Result<Step> {
    let h = BlockOp::with_partition(heff, p);
    let prop = h.try_map(|b| expm(&(b * C64::new(0.0, -dt))))?;
    Ok(Step { heff: h, prop, dt, repeats })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEvent {
    pub time: f64,
    pub reported: Qubit,
    pub true_outcome: Qubit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub stream: u64,
    pub jumps: Vec<JumpEvent>,
    pub measurements: Vec<MeasurementEvent>,
    pub final_state: Option<Vec<C64>>,
}

impl TrajectoryRecord {
    /// One JSON object per line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trajectory record serializes")
    }
}

/// A single stochastic trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    psi: CVector,
    threshold: f64,
    time: f64,
    rng: Rng,
    record: TrajectoryRecord,
}

impl Trajectory {
    pub fn new(psi0: CVector, seed: u64, stream: u64) -> Self {
        let mut rng = rng::stream(seed, stream);
        let threshold = rng.random::<f64>();
        Self {
            psi: psi0,
            threshold,
            time: 0.0,
            rng,
            record: TrajectoryRecord { seed, stream, jumps: Vec::new(), measurements: Vec::new(), final_state: None },
        }
    }

    /// A trajectory whose jump threshold is zero, so it follows the
    /// deterministic no-jump evolution until a jump is forced.
    pub fn without_jumps(psi0: CVector) -> Self {
        let mut t = Self::new(psi0, 0, 0);
        t.threshold = 0.0;
        t
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn rng(&mut self) -> &mut Rng {
        &mut self.rng
    }

    pub fn record(&self) -> &TrajectoryRecord {
        &self.record
    }

    pub fn into_record(mut self, keep_state: bool) -> TrajectoryRecord {
        if keep_state {
            let s = self.state();
            self.record.final_state = Some(s.iter().cloned().collect());
        }
        self.record
    }

    /// Normalized current state.
    pub fn state(&self) -> CVector {
        let n = self.psi.norm();
        self.psi.unscale(n)
    }

    /// Normalize the state and rescale the jump threshold accordingly, which
    /// leaves the jump statistics unchanged.
    pub fn renormalize(&mut self) {
        let s = self.psi.norm_squared();
        if s > 0.0 {
            self.psi.unscale_mut(s.sqrt());
            self.threshold /= s;
        }
    }

    fn check_norm(&self) -> Result<()> {
        let s = self.psi.norm_squared();
        if !(s > NORM_FLOOR) || !s.is_finite() {
            return Err(Error::Numeric(format!("trajectory norm underflow at t = {:.6e} s", self.time)));
        }
        Ok(())
    }

    pub fn evolve(&mut self, sched: &CompiledSchedule) -> Result<()> {
        for chunk in &sched.chunks {
            match chunk {
                Chunk::Long(step) => {
                    for _ in 0..step.repeats {
                        self.advance(step, &sched.jumps)?;
                    }
                }
                Chunk::Run { combined, steps } => {
                    let candidate = combined.apply(&self.psi);
                    if candidate.norm_squared() > self.threshold {
                        self.psi = candidate;
                        self.time += steps.iter().map(|s| s.dt).sum::<f64>();
                    } else {
                        for s in steps {
                            self.advance(s, &sched.jumps)?;
                        }
                    }
                }
            }
            self.check_norm()?;
        }
        Ok(())
    }

    fn advance(&mut self, step: &Step, jumps: &[(String, CMatrix)]) -> Result<()> {
        let next = step.prop.apply(&self.psi);
        if next.norm_squared() > self.threshold {
            self.psi = next;
            self.time += step.dt;
            return Ok(());
        }
        let mut remaining = step.dt;
        let mut start = self.psi.clone();
        loop {
            // Bisection for the crossing time inside [0, remaining].
            let (mut lo, mut hi) = (0.0, remaining);
            let mut at_hi = if remaining == step.dt { next.clone() } else { step.partial(remaining)?.apply(&start) };
            if at_hi.norm_squared() > self.threshold {
                self.psi = at_hi;
                self.time += remaining;
                return Ok(());
            }
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                let v = step.partial(mid)?.apply(&start);
                if v.norm_squared() > self.threshold {
                    lo = mid;
                } else {
                    hi = mid;
                    at_hi = v;
                }
            }
            self.psi = at_hi;
            self.time += hi;
            self.jump(jumps)?;
            remaining -= hi;
            if remaining <= 0.0 {
                return Ok(());
            }
            start = self.psi.clone();
        }
    }

    fn jump(&mut self, jumps: &[(String, CMatrix)]) -> Result<()> {
        if jumps.is_empty() {
            return Err(Error::Numeric("norm decayed without any collapse operator".into()));
        }
        let candidates: Vec<CVector> = jumps.iter().map(|(_, l)| l * &self.psi).collect();
        let weights: Vec<f64> = candidates.iter().map(|v| v.norm_squared()).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numeric(format!("no jump channel available at t = {:.6e} s", self.time)));
        }
        let mut x = self.rng.random::<f64>() * total;
        let mut chosen = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if x < *w {
                chosen = k;
                break;
            }
            x -= w;
        }
        let v = &candidates[chosen];
        self.psi = v.unscale(v.norm());
        self.threshold = self.rng.random::<f64>();
        self.record.jumps.push(JumpEvent { time: self.time, label: jumps[chosen].0.clone() });
        Ok(())
    }

    /// Apply an operator (typically a unitary gate) to the state.
    pub fn apply(&mut self, op: &BlockOp) {
        self.psi = op.apply(&self.psi);
    }

    pub fn apply_dense(&mut self, op: &CMatrix) {
        self.psi = op * &self.psi;
    }

    /// Deterministically apply a jump operator, as in a forced-jump oracle.
    pub fn force_jump(&mut self, op: &CMatrix, label: &str) -> Result<()> {
        self.renormalize();
        let v = op * &self.psi;
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::Numeric(format!("forced jump {label} annihilates the state")));
        }
        self.psi = v.unscale(n);
        self.record.jumps.push(JumpEvent { time: self.time, label: label.to_string() });
        Ok(())
    }

    /// Project the ancilla onto `q` and renormalize, without recording a
    /// measurement.
    pub fn project_ancilla(&mut self, n_fock: usize, q: Qubit) -> Result<()> {
        self.renormalize();
        if !(ancilla_prob(&self.psi, n_fock, q) > NORM_FLOOR) {
            return Err(Error::Numeric(format!("ancilla projection onto {q} has zero weight")));
        }
        self.psi = project(&self.psi, n_fock, q, false);
        Ok(())
    }

    /// Advance the clock without evolving (instantaneous-gate bookkeeping).
    pub fn advance_clock(&mut self, dt: f64) {
        self.time += dt;
    }

    /// Projective ancilla readout with the given error model, followed by an
    /// optional idle evolution standing for the readout duration.
    pub fn measure_ancilla(
        &mut self,
        n_fock: usize,
        model: &MeasurementModel,
        idle: Option<&CompiledSchedule>,
    ) -> Result<(Qubit, Qubit)> {
        self.renormalize();
        let p_g = ancilla_prob(&self.psi, n_fock, Qubit::G);
        let truth = if self.rng.random::<f64>() < p_g { Qubit::G } else { Qubit::E };
        let flip = self.rng.random::<f64>() < model.qnd_flip(truth);
        let misassign = self.rng.random::<f64>() < model.assign_err(truth);
        let reported = if misassign { truth.flipped() } else { truth };
        self.psi = project(&self.psi, n_fock, truth, flip);
        self.record.measurements.push(MeasurementEvent { time: self.time, reported, true_outcome: truth });
        if let Some(idle) = idle {
            self.evolve(idle)?;
        }
        Ok((reported, truth))
    }
}

/// A timed action in a generic trajectory run.
#[derive(Clone, Debug)]
pub struct TimedEvent {
    pub time: f64,
    pub action: EventAction,
}

#[derive(Clone, Debug)]
pub enum EventAction {
    Unitary { matrix: CMatrix, label: String },
    Measure(MeasurementModel),
}

/// Run one trajectory of H = h_static + h_t(t) with the given collapse
/// operators over `duration`, sampling the time-dependent term at step
/// midpoints with step `dt` and executing `events` at their times.
#[allow(clippy::too_many_arguments)]
pub fn mc_trajectory(
    psi0: &StateVector,
    h_static: &Operator,
    h_t: Option<&dyn Fn(f64) -> CMatrix>,
    collapse: &[Operator],
    duration: f64,
    dt: f64,
    events: &[TimedEvent],
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    crate::quantum::same_space(psi0.space(), h_static.space())?;
    if events.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::InvalidArgument("events must be sorted by time".into()));
    }
    let n_fock = psi0.space().n_fock();
    let dim = psi0.space().dim();
    let mut traj = Trajectory::new(psi0.amplitudes().clone(), seed, stream);
    let mut t = 0.0;
    let run_until = |traj: &mut Trajectory, t0: f64, t1: f64| -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        let mut sched = Schedule::new(dim);
        match h_t {
            None => sched.push(h_static.matrix().clone(), t1 - t0)?,
            Some(f) => {
                let steps = ((t1 - t0) / dt).ceil().max(1.0) as usize;
                let h = (t1 - t0) / steps as f64;
                for k in 0..steps {
                    let mid = t0 + (k as f64 + 0.5) * h;
                    sched.push(h_static.matrix() + f(mid), h)?;
                }
            }
        }
        let compiled = CompiledSchedule::new(&sched, collapse, dt.max(1e-12))?;
        traj.evolve(&compiled)
    };
    for ev in events {
        let te = ev.time.min(duration);
        run_until(&mut traj, t, te)?;
        t = te;
        match &ev.action {
            EventAction::Unitary { matrix, .. } => traj.apply_dense(matrix),
            EventAction::Measure(model) => {
                let n = n_fock.ok_or_else(|| Error::InvalidDimension("measurement needs a qubit ⊗ cavity space".into()))?;
                traj.measure_ancilla(n, model, None)?;
            }
        }
    }
    run_until(&mut traj, t, duration)?;
    Ok(traj.into_record(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_lindblad, evolve_unitary, Drive};
    use crate::quantum::{sigma_minus, sigma_x, DensityMatrix, Space};

    #[test]
    fn averaged_decay_matches_master_equation() {
        let t1: f64 = 98e-6;
        let space = Space::single(2).unwrap();
        let psi = StateVector::basis(space.clone(), 1).unwrap();
        let h = Operator::zeros(space.clone());
        let l = sigma_minus().scaled(C64::new((1.0 / t1).sqrt(), 0.0)).with_label("decay");
        let t = 60e-6;
        let n = 2000;
        let mut excited = 0usize;
        for k in 0..n {
            let rec = mc_trajectory(&psi, &h, None, &[l.clone()], t, 1e-6, &[], 11, k).unwrap();
            let s = rec.final_state.unwrap();
            if s[1].norm_sqr() > 0.5 {
                excited += 1;
            }
        }
        let me = evolve_lindblad(&psi.to_density(), &h, None, &[l], t, 1e-8).unwrap();
        let p = me.matrix()[(1, 1)].re;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((excited as f64 / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn without_collapse_equals_unitary() {
        let space = Space::single(2).unwrap();
        let psi = StateVector::basis(space.clone(), 0).unwrap();
        let h = sigma_x().scaled(C64::new(1.0e6, 0.0));
        let rec = mc_trajectory(&psi, &h, None, &[], 1e-6, 1e-8, &[], 1, 0).unwrap();
        let u = evolve_unitary(&psi, &h, Drive::None, 1e-6).unwrap();
        let got = CVector::from_vec(rec.final_state.unwrap());
        assert!((got - u.amplitudes()).norm() < 1e-10);
        let _ = DensityMatrix::from_pure(&psi);
    }

    #[test]
    fn deterministic_given_seed() {
        let space = Space::single(2).unwrap();
        let psi = StateVector::basis(space.clone(), 1).unwrap();
        let h = Operator::zeros(space);
        let l = sigma_minus().scaled(C64::new(1e5f64.sqrt(), 0.0));
        let a = mc_trajectory(&psi, &h, None, &[l.clone()], 50e-6, 1e-6, &[], 5, 9).unwrap();
        let b = mc_trajectory(&psi, &h, None, &[l], 50e-6, 1e-6, &[], 5, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.to_json_line().starts_with('{'));
    }
}
