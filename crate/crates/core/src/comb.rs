// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Frequency-comb parity mapping.
//!
//! The comb drives the ancilla in the frame of its two-photon-shifted
//! transition with tones at ±(2n−1)χ, n = 1..M. Summed, the tones form a
//! Dirichlet-kernel envelope with peaks every π/χ of alternating sign, so
//! odd photon numbers accumulate rotation coherently while even photon numbers
//! cancel. This module builds the pulse, evaluates the constant-amplitude
//! rotation angles, simulates the map and provides the Ramsey baseline.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{cardinal_states, lowest_order_binomial, Subspace};
use crate::dynamics::{MeProgram, MeasurementModel, Schedule};
use crate::quantum::{
    sigma_x, sigma_y, tensor, CMatrix, CVector, DensityMatrix, Operator, Qubit, Space, StateVector, C64,
    TRUNCATION_TAIL_LIMIT,
};
use crate::system::{collapse_operators, dispersive_hamiltonian, qubit_excited_projector, SystemParams};
use crate::{Error, Result};

/// Default comb sampling step.
pub const COMB_DT: f64 = 0.25e-9;

/// Parameters of a frequency-comb pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombSpec {
    /// Number of ± tone pairs M.
    pub m_pairs: usize,
    /// Tone spacing unit χ (rad/s).
    pub chi: f64,
    /// Amplitude Ω of each tone (rad/s).
    pub omega: f64,
    pub duration: f64,
    /// Time of the central envelope peak, t_d.
    pub delay: f64,
    /// Width of the raised-cosine rise and fall.
    pub edge: f64,
    /// Per-pair amplitude scalings λ_n (empty means all 1).
    pub scalings: Vec<f64>,
}

impl CombSpec {
    /// The constant-amplitude operating point Ω = χ/4, T = 2π/χ, no delay or edges.
    pub fn analytic(chi: f64, m_pairs: usize) -> Self {
        Self { m_pairs, chi, omega: chi / 4.0, duration: 2.0 * PI / chi, delay: 0.0, edge: 0.0, scalings: Vec::new() }
    }

    /// 22 tones, 255 ns long with a 47 ns delay and 5 ns edges.
    pub fn reference(chi: f64) -> Self {
        Self { m_pairs: 11, chi, omega: chi / 4.0, duration: 255e-9, delay: 47e-9, edge: 5e-9, scalings: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_pairs < 1 {
            return Err(Error::Config("comb needs at least one tone pair".into()));
        }
        if !(self.omega > 0.0) || !(self.chi != 0.0) || !self.chi.is_finite() {
            return Err(Error::Config("comb amplitude must be positive and χ non-zero".into()));
        }
        if !(self.edge >= 0.0) || !(self.duration > 2.0 * self.edge) {
            return Err(Error::Config(format!(
                "comb duration {:e} s must exceed twice the edge {:e} s",
                self.duration, self.edge
            )));
        }
        if !self.scalings.is_empty() && self.scalings.len() != self.m_pairs {
            return Err(Error::Config(format!(
                "comb has {} pairs but {} scalings",
                self.m_pairs,
                self.scalings.len()
            )));
        }
        Ok(())
    }

    fn scaling(&self, n: usize) -> f64 {
        self.scalings.get(n).copied().unwrap_or(1.0)
    }

    /// Envelope without edge ramps at time s relative to the central peak.
    pub fn raw_envelope(&self, s: f64) -> f64 {
        (0..self.m_pairs)
            .map(|n| 2.0 * self.omega * self.scaling(n) * ((2 * n + 1) as f64 * self.chi * s).cos())
            .sum()
    }

    /// Raised-cosine edge window at time t.
    pub fn window(&self, t: f64) -> f64 {
        if self.edge <= 0.0 {
            return 1.0;
        }
        let ramp = |x: f64| (0.5 * PI * (x / self.edge).clamp(0.0, 1.0)).sin().powi(2);
        ramp(t) * ramp(self.duration - t)
    }
}

/// Ω Σ 2cos[(2n−1)χ(t − t_d)] times the edge window.
pub fn comb_envelope(spec: &CombSpec, t: f64) -> Result<f64> {
    if !(0.0..=spec.duration).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "time {t:e} s outside the comb duration {:e} s",
            spec.duration
        )));
    }
    Ok(spec.window(t) * spec.raw_envelope(t - spec.delay))
}

/// ξ = 2 Σ_{n=0}^{M−1} Ω/((2n+1)χ) sin((2n+1)χT).
pub fn analytic_xi(spec: &CombSpec, t: f64) -> f64 {
    (0..spec.m_pairs)
        .map(|n| {
            let k = (2 * n + 1) as f64;
            2.0 * spec.omega / (k * spec.chi) * (k * spec.chi * t).sin()
        })
        .sum()
}

/// μ = ΩT + 2 Σ_{n=1}^{M−1} Ω/(2nχ) sin(2nχT).
pub fn analytic_mu(spec: &CombSpec, t: f64) -> f64 {
    spec.omega * t
        + (1..spec.m_pairs)
            .map(|n| {
                let k = (2 * n) as f64;
                2.0 * spec.omega / (k * spec.chi) * (k * spec.chi * t).sin()
            })
            .sum::<f64>()
}

/// Qubit transition frequency (rad/s, relative to bare) with two photons in the cavity.
pub fn two_photon_frame(params: &SystemParams) -> f64 {
    params.level_energy(true, 2) - params.level_energy(false, 2)
}

/// Piecewise-constant schedule of the comb in its drive frame:
/// H = H₀ − δ|e⟩⟨e| + E(t)σx with δ the two-photon transition frequency.
pub fn comb_schedule(spec: &CombSpec, params: &SystemParams, space: &Space, dt: f64) -> Result<Schedule> {
    spec.validate()?;
    let h0 = frame_hamiltonian(params, space, two_photon_frame(params))?;
    let sx = tensor(&sigma_x(), &Operator::identity(Space::single(space.require_qubit_cavity()?)?)).into_matrix();
    let steps = (spec.duration / dt).round().max(1.0) as usize;
    let h = spec.duration / steps as f64;
    let mut s = Schedule::new(space.dim());
    for k in 0..steps {
        let t = (k as f64 + 0.5) * h;
        let e = comb_envelope(spec, t)?;
        s.push(&h0 + &sx * C64::new(e, 0.0), h)?;
    }
    Ok(s)
}

/// H₀ − δ|e⟩⟨e|: the dispersive Hamiltonian in a frame rotating δ away from the bare qubit.
pub fn frame_hamiltonian(params: &SystemParams, space: &Space, delta: f64) -> Result<CMatrix> {
    Ok(dispersive_hamiltonian(params, space)?.into_matrix()
        - qubit_excited_projector(space)?.into_matrix() * C64::new(delta, 0.0))
}

/// Diagonal unitary e^{−iδT|e⟩⟨e|} returning a state evolved for time T in a
/// frame detuned by δ to the bare-qubit frame.
pub fn frame_return(space: &Space, delta: f64, t: f64) -> Result<CMatrix> {
    let n = space.require_qubit_cavity()?;
    let diag = CVector::from_fn(2 * n, |i, _| if i >= n { C64::from_polar(1.0, -delta * t) } else { C64::new(1.0, 0.0) });
    Ok(CMatrix::from_diagonal(&diag))
}

/// Settings for a parity-map simulation.
#[derive(Clone, Debug)]
pub struct ParityMapOptions {
    pub decoherence: bool,
    /// Readout error model folded into the reported errors (None = perfect readout).
    pub readout: Option<MeasurementModel>,
    pub n_fock: usize,
    /// Fock states 0..report_fock are characterized individually.
    pub report_fock: usize,
    pub dt: f64,
}

impl Default for ParityMapOptions {
    fn default() -> Self {
        Self { decoherence: false, readout: None, n_fock: 12, report_fock: 6, dt: COMB_DT }
    }
}

/// Outcome of a parity-map characterization.
#[derive(Clone, Debug)]
pub struct ParityReport {
    /// Ancilla excitation probability for each Fock input 0..report_fock.
    pub fock_excitation: Vec<f64>,
    /// Probability of reporting the wrong parity for each Fock input.
    pub fock_error: Vec<f64>,
    /// Fidelity of the cavity, conditioned on the correct outcome, to the Fock input.
    pub fock_conditional_fidelity: Vec<f64>,
    /// Mean wrong-parity probability over the six code-space cardinal states.
    pub code_space_error: f64,
    /// Mean wrong-parity probability over the six error-space cardinal states.
    pub error_space_error: f64,
    /// Reported-outcome probabilities (g, e) for the supplied input.
    pub outcome_probs: [f64; 2],
    /// Cavity state conditioned on each reported outcome for the supplied input.
    pub conditional_states: [Option<DensityMatrix>; 2],
    pub truncation_warning: bool,
}

/// A compiled parity-mapping channel on qubit ⊗ cavity density matrices.
enum ParityChannel {
    Unitary(CMatrix),
    Lindblad(MeProgram),
}

impl ParityChannel {
    fn apply(&self, rho: &CMatrix) -> CMatrix {
        match self {
            ParityChannel::Unitary(u) => u * rho * u.adjoint(),
            ParityChannel::Lindblad(p) => p.apply(rho),
        }
    }
}

fn characterize(
    channel: &ParityChannel,
    input: &DensityMatrix,
    n_fock: usize,
    report_fock: usize,
    readout: Option<&MeasurementModel>,
) -> Result<ParityReport> {
    let space = Space::qubit_cavity(n_fock)?;
    let g = DensityMatrix::from_pure(&StateVector::basis(Space::single(2)?, 0)?);
    let run = |cavity: &DensityMatrix| -> Result<CMatrix> {
        let rho = g.tensor(cavity);
        crate::quantum::same_space(rho.space(), &space)?;
        Ok(channel.apply(rho.matrix()))
    };
    let report_probs = |rho: &CMatrix| -> [f64; 2] {
        let pe: f64 = (n_fock..2 * n_fock).map(|i| rho[(i, i)].re).sum();
        let pg: f64 = (0..n_fock).map(|i| rho[(i, i)].re).sum();
        match readout {
            None => [pg, pe],
            Some(m) => [
                pg * m.report_prob(Qubit::G, Qubit::G) + pe * m.report_prob(Qubit::G, Qubit::E),
                pg * m.report_prob(Qubit::E, Qubit::G) + pe * m.report_prob(Qubit::E, Qubit::E),
            ],
        }
    };
    let cavity_given = |rho: &CMatrix, q: Qubit| -> Option<DensityMatrix> {
        let o = q.index() * n_fock;
        let block = rho.view((o, o), (n_fock, n_fock)).into_owned();
        let p = block.trace().re;
        (p > 1e-14).then(|| DensityMatrix::new(Space::single(n_fock).expect("cavity"), block.unscale(p)).expect("dims"))
    };
    let mut fock_excitation = Vec::with_capacity(report_fock);
    let mut fock_error = Vec::with_capacity(report_fock);
    let mut fock_conditional_fidelity = Vec::with_capacity(report_fock);
    for n in 0..report_fock.min(n_fock) {
        let rho = run(&StateVector::fock(n_fock, n)?.to_density())?;
        let pe: f64 = (n_fock..2 * n_fock).map(|i| rho[(i, i)].re).sum();
        fock_excitation.push(pe);
        let correct = if n % 2 == 0 { Qubit::G } else { Qubit::E };
        let probs = report_probs(&rho);
        fock_error.push(probs[correct.flipped().index()]);
        let fid = cavity_given(&rho, correct).map_or(0.0, |c| c.matrix()[(n, n)].re);
        fock_conditional_fidelity.push(fid);
    }
    let code = lowest_order_binomial(n_fock)?;
    let space_error = |which: Subspace, wrong: Qubit| -> Result<f64> {
        let states = cardinal_states(&code, which);
        let mut acc = 0.0;
        for s in &states {
            let psi = StateVector::new(Space::single(n_fock)?, s.clone())?;
            acc += report_probs(&run(&psi.to_density())?)[wrong.index()];
        }
        Ok(acc / states.len() as f64)
    };
    let code_space_error = space_error(Subspace::Code, Qubit::E)?;
    let error_space_error = space_error(Subspace::Error, Qubit::G)?;
    let out = run(input)?;
    let outcome_probs = report_probs(&out);
    let conditional_states = [cavity_given(&out, Qubit::G), cavity_given(&out, Qubit::E)];
    let tail = (n_fock - 2..n_fock).map(|k| out[(k, k)].re + out[(n_fock + k, n_fock + k)].re).sum::<f64>();
    Ok(ParityReport {
        fock_excitation,
        fock_error,
        fock_conditional_fidelity,
        code_space_error,
        error_space_error,
        outcome_probs,
        conditional_states,
        truncation_warning: tail > TRUNCATION_TAIL_LIMIT,
    })
}

/// Simulate the comb parity map on a cavity input with the ancilla in |g⟩.
pub fn simulate_parity_map(
    input: &DensityMatrix,
    spec: &CombSpec,
    params: &SystemParams,
    opts: &ParityMapOptions,
) -> Result<ParityReport> {
    let space = Space::qubit_cavity(opts.n_fock)?;
    let schedule = comb_schedule(spec, params, &space, opts.dt)?;
    let channel = if opts.decoherence {
        let ls: Vec<CMatrix> = collapse_operators(params, &space)?.into_iter().map(|o| o.into_matrix()).collect();
        ParityChannel::Lindblad(MeProgram::compile(&schedule, &ls, f64::INFINITY)?)
    } else {
        ParityChannel::Unitary(schedule.unitary()?)
    };
    let report = characterize(&channel, input, opts.n_fock, opts.report_fock, opts.readout.as_ref())?;
    if report.truncation_warning {
        log::warn!("parity map output population near the Fock truncation exceeds {TRUNCATION_TAIL_LIMIT:.0e}");
    }
    Ok(report)
}

/// Ancilla excitation after the comb for Fock states 0..count (no decoherence).
pub fn comb_fock_excitation(spec: &CombSpec, params: &SystemParams, count: usize, dt: f64) -> Result<Vec<f64>> {
    let n_fock = count + 2;
    let space = Space::qubit_cavity(n_fock)?;
    let u = comb_schedule(spec, params, &space, dt)?.block_unitary()?.to_dense();
    Ok((0..count).map(|n| u[(n_fock + n, n)].norm_sqr()).collect())
}

/// Mean parity-assignment fidelity over Fock states 0..count (no decoherence).
pub fn parity_fidelity(spec: &CombSpec, params: &SystemParams, count: usize, dt: f64) -> Result<f64> {
    let pe = comb_fock_excitation(spec, params, count, dt)?;
    Ok(pe.iter().enumerate().map(|(n, p)| if n % 2 == 0 { 1.0 - p } else { *p }).sum::<f64>() / count as f64)
}

/// Invert |δ| = ½(√(Δ² + (λΩ₀)²) − |Δ|) for λ ≥ 0.
pub fn calibrate_scaling(detuning: f64, measured_shift: f64, omega0: f64) -> Result<f64> {
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(Error::InvalidArgument("Stark calibration needs a non-zero detuning".into()));
    }
    if !(measured_shift >= 0.0) {
        return Err(Error::InvalidArgument(format!("measured Stark shift must be non-negative, got {measured_shift}")));
    }
    if !(omega0 > 0.0) {
        return Err(Error::InvalidArgument(format!("nominal amplitude must be positive, got {omega0}")));
    }
    let d = detuning.abs();
    Ok(2.0 * (measured_shift * (measured_shift + d)).sqrt() / omega0)
}

/// ½(√(Δ² + (λΩ₀)²) − |Δ|).
pub fn stark_shift(detuning: f64, lambda: f64, omega0: f64) -> f64 {
    let r = lambda * omega0;
    0.5 * ((detuning * detuning + r * r).sqrt() - detuning.abs())
}

/// Stark shift of the ancilla ground level under a single tone H = Ω(σ⁺ + σ⁻)
/// detuned by Δ, from the exact two-level eigenvalues. The Rabi frequency is 2Ω.
pub fn simulated_stark_shift(detuning: f64, amplitude: f64) -> f64 {
    let eig = CMatrix::from_row_slice(2, 2, &[
        C64::new(0.0, 0.0),
        C64::new(amplitude, 0.0),
        C64::new(amplitude, 0.0),
        C64::new(-detuning, 0.0),
    ])
    .symmetric_eigenvalues();
    // Ground-like level: the eigenvalue continuously connected to 0.
    let lg = if detuning > 0.0 { eig.max() } else { eig.min() };
    lg.abs()
}

/// Bounded grid for timing optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSearch {
    pub duration_min: f64,
    pub duration_max: f64,
    pub duration_points: usize,
    pub delay_min: f64,
    pub delay_max: f64,
    pub delay_points: usize,
    /// Number of grid-halving refinements around the best point.
    pub refinements: usize,
    /// Fock states 0..fock_count enter the objective.
    pub fock_count: usize,
    pub dt: f64,
}

impl TimingSearch {
    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n <= 1 || max <= min {
            return vec![min];
        }
        (0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug)]
pub struct TimingResult {
    pub duration: f64,
    pub delay: f64,
    pub objective: f64,
    /// Every evaluated (duration, delay, objective), coarse grid first.
    pub evaluations: Vec<(f64, f64, f64)>,
}

/// Grid-then-refine search for the (duration, delay) maximizing the mean
/// parity fidelity over low Fock states.
pub fn optimize_pulse_timing(spec: &CombSpec, params: &SystemParams, search: &TimingSearch) -> Result<TimingResult> {
    if search.duration_max < search.duration_min || search.delay_max < search.delay_min {
        return Err(Error::InvalidArgument("timing search range is empty".into()));
    }
    if search.fock_count == 0 {
        return Err(Error::InvalidArgument("timing objective needs at least one Fock state".into()));
    }
    let eval = |t: f64, d: f64| -> Result<f64> {
        let mut s = spec.clone();
        s.duration = t;
        s.delay = d;
        parity_fidelity(&s, params, search.fock_count, search.dt)
    };
    let durations = TimingSearch::axis(search.duration_min, search.duration_max, search.duration_points);
    let delays = TimingSearch::axis(search.delay_min, search.delay_max, search.delay_points);
    let points: Vec<(f64, f64)> = durations.iter().flat_map(|&t| delays.iter().map(move |&d| (t, d))).collect();
    let values = points.par_iter().map(|&(t, d)| eval(t, d)).collect::<Result<Vec<f64>>>()?;
    let mut evaluations: Vec<(f64, f64, f64)> = points.iter().zip(&values).map(|(&(t, d), &v)| (t, d, v)).collect();
    let mut best = *evaluations
        .iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("non-empty grid");
    let mut step_t = if durations.len() > 1 { durations[1] - durations[0] } else { 0.0 };
    let mut step_d = if delays.len() > 1 { delays[1] - delays[0] } else { 0.0 };
    for _ in 0..search.refinements {
        step_t *= 0.5;
        step_d *= 0.5;
        if step_t == 0.0 && step_d == 0.0 {
            break;
        }
        let mut cands = Vec::new();
        for i in -1i32..=1 {
            for j in -1i32..=1 {
                if i == 0 && j == 0 {
                    continue;
                }
                let t = (best.0 + i as f64 * step_t).clamp(search.duration_min, search.duration_max);
                let d = (best.1 + j as f64 * step_d).clamp(search.delay_min, search.delay_max);
                cands.push((t, d));
            }
        }
        let vals = cands.par_iter().map(|&(t, d)| eval(t, d)).collect::<Result<Vec<f64>>>()?;
        for (&(t, d), &v) in cands.iter().zip(&vals) {
            evaluations.push((t, d, v));
            if v > best.2 {
                best = (t, d, v);
            }
        }
    }
    Ok(TimingResult { duration: best.0, delay: best.1, objective: best.2, evaluations })
}

/// Unconditional π/2 pulses used by the Ramsey parity map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RamseyPulses {
    Instantaneous,
    /// Raised-cosine pulses of the given duration; pulse centers are π/χ apart.
    Finite { duration: f64 },
}

/// Ramsey parity map: π/2, free evolution for π/χ, then −π/2, in the
/// two-photon frame, ancilla starting in |g⟩.
pub fn ramsey_parity_map(
    input: &DensityMatrix,
    params: &SystemParams,
    chi: f64,
    pulses: RamseyPulses,
    opts: &ParityMapOptions,
) -> Result<ParityReport> {
    let n_fock = opts.n_fock;
    let space = Space::qubit_cavity(n_fock)?;
    let h0 = frame_hamiltonian(params, &space, two_photon_frame(params))?;
    let sy = tensor(&sigma_y(), &Operator::identity(Space::single(n_fock)?)).into_matrix();
    let gap = PI / chi;
    let mut schedule = Schedule::new(space.dim());
    let mut gates: Vec<(usize, CMatrix)> = Vec::new();
    let rot = |sign: f64| crate::quantum::expm(&(&sy * C64::new(0.0, -sign * PI / 4.0)));
    match pulses {
        RamseyPulses::Instantaneous => {
            gates.push((0, rot(1.0)?));
            schedule.push(h0.clone(), gap)?;
            gates.push((1, rot(-1.0)?));
        }
        RamseyPulses::Finite { duration } => {
            if !(duration > 0.0) || duration >= gap {
                return Err(Error::InvalidArgument(format!(
                    "Ramsey pulse duration {duration:e} s must be positive and shorter than π/χ"
                )));
            }
            // ∫A dt = π/4 for a π/2 rotation about y with H = A(t)σy.
            let peak = PI / (2.0 * duration);
            let steps = (duration / opts.dt).round().max(1.0) as usize;
            let h = duration / steps as f64;
            for sign in [1.0, -1.0] {
                for k in 0..steps {
                    let t = (k as f64 + 0.5) * h;
                    let a = peak * 0.5 * (1.0 - (2.0 * PI * t / duration).cos());
                    schedule.push(&h0 + &sy * C64::new(sign * a, 0.0), h)?;
                }
                if sign > 0.0 {
                    schedule.push(h0.clone(), gap - duration)?;
                }
            }
        }
    }
    let u = match pulses {
        RamseyPulses::Instantaneous => &gates[1].1 * schedule.unitary()? * &gates[0].1,
        RamseyPulses::Finite { .. } => schedule.unitary()?,
    };
    let channel = if opts.decoherence {
        if matches!(pulses, RamseyPulses::Instantaneous) {
            return Err(Error::InvalidArgument("decoherent Ramsey map needs finite pulses".into()));
        }
        let ls: Vec<CMatrix> = collapse_operators(params, &space)?.into_iter().map(|o| o.into_matrix()).collect();
        ParityChannel::Lindblad(MeProgram::compile(&schedule, &ls, f64::INFINITY)?)
    } else {
        ParityChannel::Unitary(u)
    };
    characterize(&channel, input, n_fock, opts.report_fock, opts.readout.as_ref())
}
