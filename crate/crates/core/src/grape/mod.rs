// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gradient ascent pulse engineering for state-transfer sets.
//!
//! The fidelity is the coherent-sum transfer fidelity
//! F = |Σᵢ ⟨targetᵢ| U |initialᵢ⟩|² / N². Its gradient with respect to every
//! piecewise-constant amplitude is exact: each segment exponential is
//! differentiated through the eigendecomposition of its Hamiltonian.

mod io;
pub mod lbfgs;

pub use io::{drift_hash, read_pulse_csv, write_pulse_csv};

use nalgebra::SymmetricEigen;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::CodeSpec;
use crate::dynamics::{Channel, PiecewisePulse};
use crate::quantum::{CMatrix, CVector, Space, StateVector, C64};
use crate::rng::{self, Rng};
use crate::system::{control_operators, dispersive_hamiltonian, SystemParams};
use crate::units::mhz;
use crate::{Error, Result};
use lbfgs::{minimize, LbfgsConfig, Termination};

/// A set of simultaneous state transfers under drift plus four controls.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub space: Space,
    pub h0: CMatrix,
    /// σx, σy, a + a†, i(a − a†), in `Channel` order.
    pub controls: [CMatrix; 4],
    pub transfers: Vec<(StateVector, StateVector)>,
    pub n_segments: usize,
    pub dt: f64,
}

impl ControlProblem {
    /// Problem on qubit ⊗ cavity with the dispersive drift and standard controls.
    pub fn new(
        params: &SystemParams,
        n_fock: usize,
        transfers: Vec<(StateVector, StateVector)>,
        duration: f64,
        dt: f64,
    ) -> Result<Self> {
        let space = Space::qubit_cavity(n_fock)?;
        let h0 = dispersive_hamiltonian(params, &space)?.into_matrix();
        let controls = control_operators(&space)?;
        let n_segments = (duration / dt).round() as usize;
        let p = Self { space, h0, controls, transfers, n_segments, dt };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_segments == 0 || !(self.dt > 0.0) {
            return Err(Error::InvalidArgument("control problem needs segments of positive length".into()));
        }
        if self.transfers.is_empty() {
            return Err(Error::InvalidArgument("control problem needs at least one transfer".into()));
        }
        let d = self.space.dim();
        if self.h0.nrows() != d || self.controls.iter().any(|c| c.nrows() != d) {
            return Err(Error::DimensionMismatch("drift or control does not match the space".into()));
        }
        for (i, (a, b)) in self.transfers.iter().enumerate() {
            crate::quantum::same_space(a.space(), &self.space)?;
            crate::quantum::same_space(b.space(), &self.space)?;
            if (b.amplitudes().norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("target {i} is not normalized")));
            }
            for (c, _) in &self.transfers[..i] {
                if a.inner(c)?.norm() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("initial state {i} is not orthogonal to the others")));
                }
            }
        }
        Ok(())
    }

    fn check(&self, pulse: &PiecewisePulse) -> Result<()> {
        if pulse.n_segments() != self.n_segments || (pulse.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::DimensionMismatch(format!(
                "pulse has {} segments of {:e} s, problem needs {} of {:e} s",
                pulse.n_segments(),
                pulse.dt(),
                self.n_segments,
                self.dt
            )));
        }
        Ok(())
    }

    fn segment_eigen(&self, pulse: &PiecewisePulse) -> Vec<SymmetricEigen<C64, nalgebra::Dyn>> {
        (0..self.n_segments)
            .into_par_iter()
            .map(|k| pulse.segment_hamiltonian(&self.h0, &self.controls, k).symmetric_eigen())
            .collect()
    }
}

/// Encoding transfers |g,0⟩ → |g⟩|0_L⟩ and |e,0⟩ → |g⟩|1_L⟩.
pub fn encode_transfers(code: &CodeSpec) -> Result<Vec<(StateVector, StateVector)>> {
    let n = code.dim();
    let space = Space::qubit_cavity(n)?;
    let vac = CVector::from_fn(n, |i, _| if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let embed = |q: usize, c: &CVector| {
        let mut v = CVector::zeros(2 * n);
        v.rows_mut(q * n, n).copy_from(c);
        StateVector::new(space.clone(), v)
    };
    Ok(vec![(embed(0, &vac)?, embed(0, &code.codeword(0))?), (embed(1, &vac)?, embed(0, &code.codeword(1))?)])
}

/// Decoding transfers: the inverse of `encode_transfers`.
pub fn decode_transfers(code: &CodeSpec) -> Result<Vec<(StateVector, StateVector)>> {
    Ok(encode_transfers(code)?.into_iter().map(|(a, b)| (b, a)).collect())
}

/// Propagate every initial state through the pulse.
pub fn propagate_transfers(pulse: &PiecewisePulse, prob: &ControlProblem) -> Result<Vec<StateVector>> {
    prob.check(pulse)?;
    let eig = prob.segment_eigen(pulse);
    prob.transfers
        .iter()
        .map(|(s, _)| {
            let mut v = s.amplitudes().clone();
            for e in &eig {
                v = step(e, &v, prob.dt, 1.0);
            }
            StateVector::new(prob.space.clone(), v)
        })
        .collect()
}

/// V diag(e^{∓iλdt}) V† v, sign = +1 forward, −1 backward.
fn step(e: &SymmetricEigen<C64, nalgebra::Dyn>, v: &CVector, dt: f64, sign: f64) -> CVector {
    let mut a = e.eigenvectors.ad_mul(v);
    for (ai, &l) in a.iter_mut().zip(e.eigenvalues.iter()) {
        *ai *= C64::from_polar(1.0, -sign * l * dt);
    }
    &e.eigenvectors * a
}

/// Coherent overlap Σᵢ ⟨targetᵢ|U|initialᵢ⟩.
pub fn transfer_overlap(pulse: &PiecewisePulse, prob: &ControlProblem) -> Result<C64> {
    let finals = propagate_transfers(pulse, prob)?;
    prob.transfers.iter().zip(&finals).map(|((_, t), f)| t.inner(f)).sum()
}

/// F = |Σᵢ ⟨targetᵢ|U|initialᵢ⟩|² / N².
pub fn transfer_fidelity(pulse: &PiecewisePulse, prob: &ControlProblem) -> Result<f64> {
    let n = prob.transfers.len() as f64;
    Ok(transfer_overlap(pulse, prob)?.norm_sqr() / (n * n))
}

/// Overlap and its derivative with respect to every amplitude, indexed
/// [segment][channel].
pub fn overlap_gradient(pulse: &PiecewisePulse, prob: &ControlProblem) -> Result<(C64, Vec<[C64; 4]>)> {
    prob.check(pulse)?;
    let eig = prob.segment_eigen(pulse);
    let dt = prob.dt;
    let k_max = prob.n_segments;
    // Forward states before each segment, in each segment's eigenbasis.
    let mut fwd: Vec<Vec<CVector>> = Vec::with_capacity(k_max);
    let mut states: Vec<CVector> = prob.transfers.iter().map(|(s, _)| s.amplitudes().clone()).collect();
    for e in &eig {
        let a: Vec<CVector> = states.iter().map(|v| e.eigenvectors.ad_mul(v)).collect();
        for (v, ai) in states.iter_mut().zip(&a) {
            let mut r = ai.clone();
            for (x, &l) in r.iter_mut().zip(e.eigenvalues.iter()) {
                *x *= C64::from_polar(1.0, -l * dt);
            }
            *v = &e.eigenvectors * r;
        }
        fwd.push(a);
    }
    let overlap: C64 = prob.transfers.iter().zip(&states).map(|((_, t), f)| t.amplitudes().dotc(f)).sum();
    let mut back: Vec<CVector> = prob.transfers.iter().map(|(_, t)| t.amplitudes().clone()).collect();
    let mut grad = vec![[C64::new(0.0, 0.0); 4]; k_max];
    let d = prob.space.dim();
    for k in (0..k_max).rev() {
        let e = &eig[k];
        let b: Vec<CVector> = back.iter().map(|v| e.eigenvectors.ad_mul(v)).collect();
        let lam = &e.eigenvalues;
        let ph: Vec<C64> = lam.iter().map(|&l| C64::from_polar(1.0, -l * dt)).collect();
        // N = M ∘ G with M_ab = Σᵢ conj(b_ia) a_ib.
        let mut nmat = CMatrix::zeros(d, d);
        for (bi, ai) in b.iter().zip(&fwd[k]) {
            for col in 0..d {
                let ac = ai[col];
                for row in 0..d {
                    nmat[(row, col)] += bi[row].conj() * ac;
                }
            }
        }
        for col in 0..d {
            for row in 0..d {
                let diff = lam[row] - lam[col];
                let g = if diff.abs() * dt < 1e-8 {
                    ph[row] * C64::new(0.0, -dt) * C64::from_polar(1.0, 0.5 * diff * dt)
                } else {
                    (ph[row] - ph[col]) / diff
                };
                nmat[(row, col)] *= g;
            }
        }
        // W = conj(V) N Vᵀ; d overlap / du_c = Σ_jl C_jl W_jl.
        let vconj = e.eigenvectors.map(|z| z.conj());
        let w = &vconj * nmat * e.eigenvectors.transpose();
        for (c, ctrl) in prob.controls.iter().enumerate() {
            grad[k][c] = ctrl.iter().zip(w.iter()).map(|(x, y)| x * y).sum();
        }
        for (v, bi) in back.iter_mut().zip(&b) {
            let mut r = bi.clone();
            for (x, p) in r.iter_mut().zip(&ph) {
                *x *= p.conj();
            }
            *v = &e.eigenvectors * r;
        }
    }
    Ok((overlap, grad))
}

/// dF/du for every segment and channel (per rad/s of amplitude), indexed [channel][segment].
pub fn gradient(pulse: &PiecewisePulse, prob: &ControlProblem) -> Result<[Vec<f64>; 4]> {
    let (o, g) = overlap_gradient(pulse, prob)?;
    let n = prob.transfers.len() as f64;
    let scale = 2.0 / (n * n);
    Ok(std::array::from_fn(|c| g.iter().map(|s| scale * (o.conj() * s[c]).re).collect()))
}

/// GRAPE settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Stop once the transfer fidelity reaches this value.
    pub target_fidelity: f64,
    /// Amplitude bounds per channel (rad/s); samples are clipped to them on return.
    pub bounds: [f64; 4],
    /// Weight of the quadratic penalty on normalized amplitude above the bound.
    pub amplitude_weight: f64,
    /// Weight of the quadratic first-difference penalty on normalized amplitude.
    pub slope_weight: f64,
    /// Hold the first and last segments at zero.
    pub boundary_zero: bool,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iter: 3000,
            grad_tol: 1e-9,
            target_fidelity: 0.999,
            bounds: [mhz(10.0), mhz(10.0), mhz(2.0), mhz(2.0)],
            amplitude_weight: 1.0,
            slope_weight: 0.0,
            boundary_zero: true,
            seed: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.amplitude_weight < 0.0 || self.slope_weight < 0.0 {
            return Err(Error::Config("penalty weights must be non-negative".into()));
        }
        if self.bounds.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Config("amplitude bounds must be positive".into()));
        }
        Ok(())
    }
}

/// One accepted optimizer iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub fidelity: f64,
    /// Fidelity minus penalties.
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct GrapeResult {
    pub pulse: PiecewisePulse,
    /// Fidelity of the returned (clipped) pulse.
    pub fidelity: f64,
    pub trace: Vec<TraceEntry>,
    pub iterations: usize,
    /// False if the optimizer stopped at max_iter below the target fidelity.
    pub converged: bool,
}

struct Layout {
    n: usize,
    bounds: [f64; 4],
    boundary_zero: bool,
}

impl Layout {
    fn free(&self, k: usize) -> bool {
        !(self.boundary_zero && (k == 0 || k + 1 == self.n))
    }

    fn pulse(&self, x: &[f64], dt: f64) -> Result<PiecewisePulse> {
        let samples = std::array::from_fn(|c| (0..self.n).map(|k| x[c * self.n + k] * self.bounds[c]).collect());
        PiecewisePulse::new(dt, samples)
    }
}

fn penalties(x: &[f64], lay: &Layout, cfg: &OptimizerConfig, grad: &mut [f64]) -> f64 {
    let mut p = 0.0;
    for c in 0..4 {
        let row = &x[c * lay.n..(c + 1) * lay.n];
        for (k, &v) in row.iter().enumerate() {
            let over = v.abs() - 1.0;
            if over > 0.0 {
                p += cfg.amplitude_weight * over * over;
                grad[c * lay.n + k] += cfg.amplitude_weight * 2.0 * over * v.signum();
            }
            if k + 1 < lay.n {
                let dlt = row[k + 1] - v;
                p += cfg.slope_weight * dlt * dlt;
                grad[c * lay.n + k] -= cfg.slope_weight * 2.0 * dlt;
                grad[c * lay.n + k + 1] += cfg.slope_weight * 2.0 * dlt;
            }
        }
    }
    p
}

/// Maximize the transfer fidelity minus penalties with L-BFGS, starting from
/// small seeded random amplitudes (1% of the bounds).
pub fn optimize(prob: &ControlProblem, cfg: &OptimizerConfig) -> Result<GrapeResult> {
    let mut rng = rng::stream(cfg.seed, 0);
    let init = |rng: &mut Rng| rng.random_range(-0.01..0.01);
    let n = prob.n_segments;
    let lay = Layout { n, bounds: cfg.bounds, boundary_zero: cfg.boundary_zero };
    let x0: Vec<f64> = (0..4 * n).map(|i| if lay.free(i % n) { init(&mut rng) } else { 0.0 }).collect();
    optimize_from(prob, cfg, x0.iter().enumerate().map(|(i, v)| v * cfg.bounds[i / n]).collect())
}

/// As `optimize`, from explicit initial amplitudes laid out channel-major (rad/s).
pub fn optimize_from(prob: &ControlProblem, cfg: &OptimizerConfig, initial: Vec<f64>) -> Result<GrapeResult> {
    prob.validate()?;
    cfg.validate()?;
    let n = prob.n_segments;
    if initial.len() != 4 * n {
        return Err(Error::DimensionMismatch(format!("initial pulse has {} values, need {}", initial.len(), 4 * n)));
    }
    let lay = Layout { n, bounds: cfg.bounds, boundary_zero: cfg.boundary_zero };
    let x0: Vec<f64> = initial
        .iter()
        .enumerate()
        .map(|(i, v)| if lay.free(i % n) { v / cfg.bounds[i / n] } else { 0.0 })
        .collect();
    let mut failure: Option<Error> = None;
    let last_fid = std::cell::Cell::new(0.0);
    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let res = lay.pulse(x, prob.dt).and_then(|p| {
            let (o, g) = overlap_gradient(&p, prob)?;
            Ok((o, g))
        });
        match res {
            Ok((o, g)) => {
                let nt = prob.transfers.len() as f64;
                let fid = o.norm_sqr() / (nt * nt);
                let mut grad = vec![0.0; 4 * n];
                for c in 0..4 {
                    for k in 0..n {
                        if lay.free(k) {
                            grad[c * n + k] = -2.0 / (nt * nt) * (o.conj() * g[k][c]).re * lay.bounds[c];
                        }
                    }
                }
                let pen = penalties(x, &lay, cfg, &mut grad);
                for c in 0..4 {
                    for k in 0..n {
                        if !lay.free(k) {
                            grad[c * n + k] = 0.0;
                        }
                    }
                }
                last_fid.set(fid);
                (-(fid - pen), grad)
            }
            Err(e) => {
                failure.get_or_insert(e);
                (f64::NAN, vec![0.0; 4 * n])
            }
        }
    };
    let mut trace = Vec::new();
    let lcfg = LbfgsConfig { max_iter: cfg.max_iter, grad_tol: cfg.grad_tol, ..Default::default() };
    let out = minimize(eval, x0, &lcfg, |it, _x, f, _g| {
        // The accepted point is always the most recent evaluation.
        let fid = last_fid.get();
        trace.push(TraceEntry { iteration: it, fidelity: fid, objective: -f });
        if it % 50 == 0 {
            log::debug!("grape iteration {it}: fidelity {fid:.6}");
        }
        fid < cfg.target_fidelity
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let mut pulse = lay.pulse(&out.x, prob.dt)?;
    for ch in Channel::ALL {
        let b = cfg.bounds[ch.index()];
        for v in pulse.channel_mut(ch) {
            *v = v.clamp(-b, b);
        }
    }
    let fidelity = transfer_fidelity(&pulse, prob)?;
    let converged = fidelity >= cfg.target_fidelity || out.termination != Termination::MaxIter;
    if !converged {
        log::warn!("GRAPE stopped after {} iterations at fidelity {fidelity:.6}", out.iterations);
    }
    Ok(GrapeResult { pulse, fidelity, trace, iterations: out.iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_unitary, Drive};
    use crate::quantum::Operator;
    use rand::SeedableRng;

    fn random_problem(seed: u64, n_fock: usize, segments: usize) -> (ControlProblem, PiecewisePulse) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = SystemParams::reference();
        let space = Space::qubit_cavity(n_fock).unwrap();
        let d = space.dim();
        let rand_state = |rng: &mut rand_chacha::ChaCha8Rng| {
            let v = CVector::from_fn(d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            StateVector::new(space.clone(), v.normalize()).unwrap()
        };
        let a = StateVector::basis(space.clone(), 0).unwrap();
        let b = StateVector::basis(space.clone(), n_fock + 1).unwrap();
        let transfers = vec![(a, rand_state(&mut rng)), (b, rand_state(&mut rng))];
        let prob = ControlProblem::new(&p, n_fock, transfers, segments as f64 * 20e-9, 20e-9).unwrap();
        let samples = std::array::from_fn(|c| {
            (0..segments).map(|_| rng.random_range(-1.0..1.0) * if c < 2 { mhz(10.0) } else { mhz(2.0) }).collect()
        });
        (prob, PiecewisePulse::new(20e-9, samples).unwrap())
    }

    #[test]
    fn trivial_fidelities() {
        let p = SystemParams::zero();
        let space = Space::qubit_cavity(3).unwrap();
        let g0 = StateVector::basis(space.clone(), 0).unwrap();
        let e0 = StateVector::basis(space.clone(), 3).unwrap();
        let same = ControlProblem::new(&p, 3, vec![(g0.clone(), g0.clone()), (e0.clone(), e0.clone())], 10e-9, 1e-9).unwrap();
        let zero = PiecewisePulse::zeros(1e-9, 10).unwrap();
        assert!((transfer_fidelity(&zero, &same).unwrap() - 1.0).abs() < 1e-12);
        let g = gradient(&zero, &same).unwrap();
        assert!(g.iter().flatten().all(|v| v.abs() < 1e-10));
        let orth = ControlProblem::new(&p, 3, vec![(g0.clone(), e0.clone())], 10e-9, 1e-9).unwrap();
        assert!(transfer_fidelity(&zero, &orth).unwrap() < 1e-20);
        let (prob, pulse) = random_problem(3, 4, 3);
        let f = transfer_fidelity(&pulse, &prob).unwrap();
        let mut shifted = prob.clone();
        let phase = C64::from_polar(1.0, 0.7);
        for (_, t) in &mut shifted.transfers {
            *t = StateVector::new(t.space().clone(), t.amplitudes() * phase).unwrap();
        }
        assert!((transfer_fidelity(&pulse, &shifted).unwrap() - f).abs() < 1e-12);
        assert!(transfer_fidelity(&PiecewisePulse::zeros(20e-9, 4).unwrap(), &prob).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..4 {
            let (prob, pulse) = random_problem(seed, 4, 3);
            let g = gradient(&pulse, &prob).unwrap();
            let mut worst: f64 = 0.0;
            for ch in Channel::ALL {
                let bound = if ch.is_qubit() { mhz(10.0) } else { mhz(2.0) };
                for k in 0..3 {
                    let h = 1e-6 * bound;
                    let mut plus = pulse.clone();
                    plus.channel_mut(ch)[k] += h;
                    let mut minus = pulse.clone();
                    minus.channel_mut(ch)[k] -= h;
                    let fd = (transfer_fidelity(&plus, &prob).unwrap() - transfer_fidelity(&minus, &prob).unwrap()) / (2.0 * h);
                    let an = g[ch.index()][k];
                    worst = worst.max((fd - an).abs() / an.abs().max(1e-3 / bound));
                }
            }
            assert!(worst < 1e-5, "seed {seed}: relative error {worst:e}");
        }
    }

    #[test]
    fn overlap_gradient_is_sum_over_transfers() {
        let (prob, pulse) = random_problem(11, 3, 3);
        let (o, g) = overlap_gradient(&pulse, &prob).unwrap();
        let mut sum_o = C64::new(0.0, 0.0);
        let mut sum_g = vec![[C64::new(0.0, 0.0); 4]; 3];
        for t in &prob.transfers {
            let single = ControlProblem { transfers: vec![t.clone()], ..prob.clone() };
            let (oi, gi) = overlap_gradient(&pulse, &single).unwrap();
            sum_o += oi;
            for k in 0..3 {
                for c in 0..4 {
                    sum_g[k][c] += gi[k][c];
                }
            }
        }
        assert!((sum_o - o).norm() < 1e-12);
        for k in 0..3 {
            for c in 0..4 {
                assert!((sum_g[k][c] - g[k][c]).norm() < 1e-12 * (1.0 + g[k][c].norm()));
            }
        }
    }

    #[test]
    fn qubit_pi_transfer() {
        let p = SystemParams::zero();
        let space = Space::qubit_cavity(2).unwrap();
        let g0 = StateVector::basis(space.clone(), 0).unwrap();
        let e0 = StateVector::basis(space.clone(), 2).unwrap();
        let prob = ControlProblem::new(&p, 2, vec![(g0, e0)], 20e-9, 1e-9).unwrap();
        let cfg = OptimizerConfig { target_fidelity: 0.99999, amplitude_weight: 1.0, boundary_zero: false, ..Default::default() };
        let r = optimize(&prob, &cfg).unwrap();
        assert!(r.fidelity > 0.9999, "{}", r.fidelity);
        assert!(r.trace.windows(2).all(|w| w[1].objective >= w[0].objective));
        for ch in Channel::ALL {
            assert!(r.pulse.max_abs(ch) <= cfg.bounds[ch.index()] + 1e-9);
        }
        // Cross-check with the unitary propagator.
        let h0 = Operator::new(prob.space.clone(), prob.h0.clone(), "H0").unwrap();
        let psi = evolve_unitary(
            &prob.transfers[0].0,
            &h0,
            Drive::Piecewise { pulse: &r.pulse, controls: &prob.controls },
            r.pulse.duration(),
        )
        .unwrap();
        let f = prob.transfers[0].1.inner(&psi).unwrap().norm_sqr();
        assert!((f - r.fidelity).abs() < 1e-9);
    }

    #[test]
    fn fidelity_trace_is_monotone_without_penalties() {
        let (prob, _) = random_problem(8, 3, 6);
        let cfg = OptimizerConfig { amplitude_weight: 0.0, bounds: [mhz(50.0); 4], max_iter: 60, ..Default::default() };
        let r = optimize(&prob, &cfg).unwrap();
        assert!(r.trace.len() > 5);
        assert!(r.trace.windows(2).all(|w| w[1].fidelity >= w[0].fidelity));
    }

    #[test]
    fn boundary_zero_and_tight_bounds() {
        let p = SystemParams::reference();
        let space = Space::qubit_cavity(3).unwrap();
        let g0 = StateVector::basis(space.clone(), 0).unwrap();
        let e0 = StateVector::basis(space.clone(), 3).unwrap();
        let prob = ControlProblem::new(&p, 3, vec![(g0, e0)], 40e-9, 2e-9).unwrap();
        let cfg = OptimizerConfig {
            bounds: [mhz(4.0), mhz(4.0), mhz(0.5), mhz(0.5)],
            amplitude_weight: 10.0,
            slope_weight: 1e-4,
            max_iter: 200,
            ..Default::default()
        };
        let r = optimize(&prob, &cfg).unwrap();
        for ch in Channel::ALL {
            let s = r.pulse.channel(ch);
            let b = cfg.bounds[ch.index()];
            assert!(s[0].abs() < 1e-6 * b && s[s.len() - 1].abs() < 1e-6 * b);
            assert!(r.pulse.max_abs(ch) <= b + 1e-9);
        }
        assert!(r.fidelity > 0.9, "{}", r.fidelity);
    }

    #[test]
    fn csv_round_trip() {
        let (prob, pulse) = random_problem(5, 3, 3);
        let hash = drift_hash(&prob.h0);
        let mut buf = Vec::new();
        write_pulse_csv(&mut buf, &pulse, &hash).unwrap();
        let (back, h) = read_pulse_csv(&buf[..]).unwrap();
        assert_eq!(h.as_deref(), Some(hash.as_str()));
        assert_eq!(back.dt().to_bits(), pulse.dt().to_bits());
        for ch in Channel::ALL {
            for (a, b) in pulse.channel(ch).iter().zip(back.channel(ch)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert!(read_pulse_csv(&b"time,a\n"[..]).is_err());
    }
}
