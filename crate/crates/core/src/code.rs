// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! The lowest-order binomial code, its error space, no-jump deformation,
//! recovery maps and the photon-number-resolved Stark shift (PASS) that makes
//! photon jumps transparent to the logical phase.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dynamics::Schedule;
use crate::quantum::{
    annihilation, completed_isometry, CMatrix, CVector, Operator, Space, C64, I, ZERO,
};
use crate::system::{dispersive_hamiltonian, qubit_excited_projector, qubit_lower, SystemParams};
use crate::{Error, Result};

/// Logical codewords and their single-loss error words in a truncated Fock space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub name: String,
    pub codewords: [Vec<C64>; 2],
    pub error_words: [Vec<C64>; 2],
}

/// Which two-dimensional subspace of a code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subspace {
    Code,
    Error,
}

impl CodeSpec {
    pub fn dim(&self) -> usize {
        self.codewords[0].len()
    }

    pub fn codeword(&self, k: usize) -> CVector {
        CVector::from_column_slice(&self.codewords[k])
    }

    pub fn error_word(&self, k: usize) -> CVector {
        CVector::from_column_slice(&self.error_words[k])
    }

    pub fn basis(&self, which: Subspace) -> [CVector; 2] {
        match which {
            Subspace::Code => [self.codeword(0), self.codeword(1)],
            Subspace::Error => [self.error_word(0), self.error_word(1)],
        }
    }

    /// Check orthonormality, mutual orthogonality of code and error spaces,
    /// and equal mean photon number of the codewords.
    pub fn validate(&self, tol: f64) -> Result<()> {
        self.validate_orthonormal(tol)?;
        let n = |v: &CVector| v.iter().enumerate().map(|(k, c)| k as f64 * c.norm_sqr()).sum::<f64>();
        if (n(&self.codeword(0)) - n(&self.codeword(1))).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "code {}: codewords have unequal mean photon number",
                self.name
            )));
        }
        Ok(())
    }

    /// Orthonormality of the four code and error vectors.
    pub fn validate_orthonormal(&self, tol: f64) -> Result<()> {
        let d = self.dim();
        if self.codewords.iter().chain(&self.error_words).any(|v| v.len() != d) {
            return Err(Error::DimensionMismatch("code vectors differ in length".into()));
        }
        let all = [self.codeword(0), self.codeword(1), self.error_word(0), self.error_word(1)];
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (all[i].dotc(&all[j]) - C64::new(expect, 0.0)).norm() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "code {}: basis vectors {i} and {j} are not orthonormal",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

fn fock_vec(dim: usize, entries: &[(usize, f64)]) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    for &(n, a) in entries {
        v[n] = C64::new(a, 0.0);
    }
    v
}

/// |0_L⟩ = (|0⟩ + |4⟩)/√2, |1_L⟩ = |2⟩; error words |0_E⟩ = |3⟩, |1_E⟩ = |1⟩.
pub fn lowest_order_binomial(dim: usize) -> Result<CodeSpec> {
    if dim < 5 {
        return Err(Error::InvalidDimension(format!("binomial code needs truncation ≥ 5, got {dim}")));
    }
    let s = 0.5f64.sqrt();
    Ok(CodeSpec {
        name: "binomial-lowest-order".into(),
        codewords: [fock_vec(dim, &[(0, s), (4, s)]), fock_vec(dim, &[(2, 1.0)])],
        error_words: [fock_vec(dim, &[(3, 1.0)]), fock_vec(dim, &[(1, 1.0)])],
    })
}

/// Fock {|0⟩, |1⟩} encoding used as the break-even reference.
pub fn fock01(dim: usize) -> Result<CodeSpec> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("Fock encoding needs truncation ≥ 2, got {dim}")));
    }
    Ok(CodeSpec {
        name: "fock01".into(),
        codewords: [fock_vec(dim, &[(0, 1.0)]), fock_vec(dim, &[(1, 1.0)])],
        error_words: [fock_vec(dim, &[]), fock_vec(dim, &[])],
    })
}

/// The six cardinal states ±Z, ±X, ±Y of a two-dimensional subspace, in that
/// order: |0⟩, |1⟩, (|0⟩ ± |1⟩)/√2, (|0⟩ ± i|1⟩)/√2.
pub fn cardinal_states(spec: &CodeSpec, which: Subspace) -> [CVector; 6] {
    let [b0, b1] = spec.basis(which);
    cardinal_from_basis(&b0, &b1)
}

pub fn cardinal_from_basis(b0: &CVector, b1: &CVector) -> [CVector; 6] {
    let s = C64::new(0.5f64.sqrt(), 0.0);
    [
        b0.clone(),
        b1.clone(),
        (b0 + b1) * s,
        (b0 - b1) * s,
        (b0 + b1 * I) * s,
        (b0 - b1 * I) * s,
    ]
}

/// Apply the no-jump Kraus operator e^{−κtn̂/2} to every code vector and
/// renormalize each one.
pub fn no_jump_deformation(spec: &CodeSpec, kappa: f64, t: f64) -> Result<CodeSpec> {
    let x = kappa * t;
    if !(0.0..3.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("no-jump deformation needs 0 ≤ κt < 3, got {x}")));
    }
    let deform = |v: &Vec<C64>| -> Vec<C64> {
        let w: Vec<C64> = v.iter().enumerate().map(|(n, c)| c * (-0.5 * x * n as f64).exp()).collect();
        let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            w.iter().map(|c| c / norm).collect()
        } else {
            w
        }
    };
    Ok(CodeSpec {
        name: format!("{} (no-jump κt = {x:.4})", spec.name),
        codewords: [deform(&spec.codewords[0]), deform(&spec.codewords[1])],
        error_words: [deform(&spec.error_words[0]), deform(&spec.error_words[1])],
    })
}

/// 2(κt)² e^{−2κt}: probability scale of two photon losses in time t.
pub fn two_photon_loss_prob(kappa: f64, t: f64) -> Result<f64> {
    let x = kappa * t;
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("κt must be non-negative, got {x}")));
    }
    Ok(2.0 * x * x * (-2.0 * x).exp())
}

/// Whether a photon loss was detected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryCase {
    Jump,
    NoJump,
}

/// Cavity unitary mapping the deformed code basis (no jump) or the normalized
/// images a|c_k⟩ of the deformed codewords (jump) back onto the codewords.
pub fn ideal_recovery(spec: &CodeSpec, case: RecoveryCase, kappa: f64, t: f64) -> Result<Operator> {
    let d = spec.dim();
    let deformed = no_jump_deformation(spec, kappa, t)?;
    let sources: Vec<CVector> = match case {
        RecoveryCase::NoJump => vec![deformed.codeword(0), deformed.codeword(1)],
        RecoveryCase::Jump => {
            let a = annihilation(d)?.into_matrix();
            (0..2)
                .map(|k| {
                    let v = &a * deformed.codeword(k);
                    let n = v.norm();
                    v.unscale(n)
                })
                .collect()
        }
    };
    let targets = vec![spec.codeword(0), spec.codeword(1)];
    let u = completed_isometry(&sources, &targets)?;
    Operator::new(Space::single(d)?, u, format!("recovery {case:?}"))
}

/// Photon-number-resolved Stark shift operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassCalibration {
    /// Drive detuning from the bare qubit frequency (rad/s).
    pub detuning: f64,
    /// Drive amplitude Ω (rad/s), H_d = Ω(σ⁺ + σ⁻) in the drive frame.
    pub amplitude: f64,
    /// Phase accumulation rates f_1..f_4 (Hz) relative to vacuum.
    pub rates_hz: [f64; 4],
}

/// (f₄ − f₂) − (f₃ − f₁) in Hz.
pub fn pass_residual(cal: &PassCalibration) -> f64 {
    let f = &cal.rates_hz;
    (f[3] - f[1]) - (f[2] - f[0])
}

/// Dressed energies (rad/s, qubit frame) of the ground-like and excited-like
/// states of each photon-number block under a constant detuned qubit drive.
pub fn dressed_energies(p: &SystemParams, detuning: f64, amplitude: f64, n_levels: usize) -> Vec<(f64, f64)> {
    (0..n_levels)
        .map(|n| {
            let eg = p.level_energy(false, n);
            let ee = p.level_energy(true, n) - detuning;
            let mean = 0.5 * (eg + ee);
            let half = 0.5 * (eg - ee);
            let r = (half * half + amplitude * amplitude).sqrt();
            // The branch continuously connected to |g, n⟩ as Ω → 0.
            let (lg, le) = if half >= 0.0 { (mean + r, mean - r) } else { (mean - r, mean + r) };
            (lg, le + detuning)
        })
        .collect()
}

/// Phase rates f_1..f_4 (Hz) from the dressed ground-branch energies.
pub fn pass_rates(p: &SystemParams, detuning: f64, amplitude: f64) -> [f64; 4] {
    let e = dressed_energies(p, detuning, amplitude, 5);
    std::array::from_fn(|k| (e[k + 1].0 - e[0].0) / TAU)
}

/// Default amplitude sweep for PASS calibration: Ω/2π from 2 kHz to 300 kHz
/// in 2 kHz steps.
pub fn default_pass_sweep() -> Vec<f64> {
    (1..=150).map(|k| TAU * 2e3 * k as f64).collect()
}

/// Find the drive amplitude at which the PASS residual changes sign.
pub fn calibrate_pass(p: &SystemParams, detuning: f64, amplitudes: &[f64]) -> Result<PassCalibration> {
    let chi = p.chi_qc;
    if chi != 0.0 {
        let ratio = -detuning / chi;
        if (ratio - ratio.round()).abs() < 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "PASS detuning {detuning:e} rad/s is resonant with a photon-number line"
            )));
        }
    }
    let sweep: Vec<f64> = amplitudes.iter().cloned().filter(|&a| a > 0.0).collect();
    let residual = |a: f64| {
        pass_residual(&PassCalibration { detuning, amplitude: a, rates_hz: pass_rates(p, detuning, a) })
    };
    let values: Vec<f64> = sweep.iter().map(|&a| residual(a)).collect();
    for k in 1..sweep.len() {
        let (r0, r1) = (values[k - 1], values[k]);
        if r0 == 0.0 || r0.signum() != r1.signum() {
            let a = if r0 == r1 { sweep[k - 1] } else { sweep[k - 1] + (sweep[k] - sweep[k - 1]) * r0 / (r0 - r1) };
            return Ok(PassCalibration { detuning, amplitude: a, rates_hz: pass_rates(p, detuning, a) });
        }
    }
    Err(Error::Calibration(format!(
        "PASS residual does not change sign over {} swept amplitudes",
        sweep.len()
    )))
}

/// Ramsey-style measurement of the phase rates by explicit time evolution:
/// the drive is ramped on adiabatically, held for two plateau lengths, ramped
/// off, and the relative phase of |g, n⟩ to |g, 0⟩ is differenced.
pub fn ramsey_rates(p: &SystemParams, detuning: f64, amplitude: f64, n_fock: usize) -> Result<[f64; 4]> {
    let space = Space::qubit_cavity(n_fock)?;
    let h0 = dispersive_hamiltonian(p, &space)?.into_matrix()
        - qubit_excited_projector(&space)?.into_matrix() * C64::new(detuning, 0.0);
    let sp = qubit_lower(&space)?.dagger().into_matrix();
    let sx = &sp + sp.adjoint();
    let phases = |plateau: f64| -> Result<Vec<f64>> {
        let mut s = Schedule::new(space.dim());
        let ramp = 2e-6;
        let n_ramp = 1000;
        let dt = ramp / n_ramp as f64;
        let env = |k: usize| 0.5 * (1.0 - (std::f64::consts::PI * (k as f64 + 0.5) / n_ramp as f64).cos());
        for k in 0..n_ramp {
            s.push(&h0 + &sx * C64::new(amplitude * env(k), 0.0), dt)?;
        }
        s.push(&h0 + &sx * C64::new(amplitude, 0.0), plateau)?;
        for k in (0..n_ramp).rev() {
            s.push(&h0 + &sx * C64::new(amplitude * env(k), 0.0), dt)?;
        }
        let u = s.unitary()?;
        Ok((0..5).map(|n| u[(n, n)].arg()).collect())
    };
    let (t1, t2) = (1e-6, 3e-6);
    let a = phases(t1)?;
    let b = phases(t2)?;
    Ok(std::array::from_fn(|k| {
        let n = k + 1;
        let d1 = a[n] - a[0];
        let d2 = b[n] - b[0];
        let mut delta = d2 - d1;
        delta -= TAU * (delta / TAU).round();
        -delta / (TAU * (t2 - t1))
    }))
}

/// Diagonal Hamiltonian of an ideal (adiabatically eliminated) PASS drive:
/// each |q, n⟩ carries its dressed energy.
pub fn pass_effective_hamiltonian(p: &SystemParams, cal: &PassCalibration, space: &Space) -> Result<CMatrix> {
    let n = space.require_qubit_cavity()?;
    let e = dressed_energies(p, cal.detuning, cal.amplitude, n);
    let diag = CVector::from_fn(2 * n, |i, _| {
        let (q, k) = (i / n, i % n);
        C64::new(if q == 0 { e[k].0 } else { e[k].1 }, 0.0)
    });
    Ok(CMatrix::from_diagonal(&diag))
}
