// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dispersive qubit–cavity model: Hamiltonian, drives and collapse operators.
//!
//! Everything is expressed in the frame rotating at the bare qubit and cavity
//! frequencies, with ħ = 1 and angular frequencies in rad/s.

use serde::{Deserialize, Serialize};

use crate::quantum::{
    annihilation, number, proj_e, sigma_minus, tensor, CMatrix, Operator, Space, C64, I,
};
use crate::units::{khz, mhz, US};
use crate::{Error, Result};

/// Physical parameters of the qubit–cavity device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Qubit–cavity cross-Kerr χ (rad/s).
    pub chi_qc: f64,
    /// Cavity self-Kerr K (rad/s).
    pub k_c: f64,
    /// Higher-order cavity self-Kerr K′ (rad/s).
    pub k_c_prime: f64,
    /// Higher-order cross-Kerr χ′ (rad/s).
    pub chi_qc_prime: f64,
    pub t1_q: f64,
    pub tphi_q: f64,
    pub t1_c: f64,
    pub tphi_c: f64,
    pub nth_q: f64,
    pub nth_c: f64,
    /// Include the K′ and χ′ terms in the Hamiltonian.
    pub higher_order: bool,
    pub metadata: Option<DeviceMetadata>,
}

/// Device values that are recorded but not simulated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceMetadata {
    pub omega_q: f64,
    pub omega_c: f64,
    pub omega_r: f64,
    pub k_q: f64,
    pub k_r: f64,
    pub chi_qr: f64,
    pub chi_cr: f64,
    pub kappa_r: f64,
    pub t1_r: f64,
    pub nth_r: f64,
}

impl DeviceMetadata {
    pub fn reference() -> Self {
        Self {
            omega_q: mhz(4962.0),
            omega_c: mhz(6532.0),
            omega_r: mhz(8562.0),
            k_q: mhz(216.0),
            k_r: khz(4.2),
            chi_qr: mhz(1.9),
            chi_cr: khz(12.7),
            kappa_r: mhz(2.7),
            t1_r: 58e-9,
            nth_r: 0.001,
        }
    }
}

impl SystemParams {
    /// Reference device values.
    pub fn reference() -> Self {
        Self {
            chi_qc: mhz(2.59),
            k_c: khz(9.7),
            k_c_prime: khz(0.32),
            chi_qc_prime: khz(5.41),
            t1_q: 98.0 * US,
            tphi_q: 968.0 * US,
            t1_c: 578.0 * US,
            tphi_c: 4389.0 * US,
            nth_q: 0.013,
            nth_c: 0.006,
            higher_order: true,
            metadata: Some(DeviceMetadata::reference()),
        }
    }

    /// All couplings zero and coherence effectively infinite.
    pub fn zero() -> Self {
        Self {
            chi_qc: 0.0,
            k_c: 0.0,
            k_c_prime: 0.0,
            chi_qc_prime: 0.0,
            t1_q: f64::INFINITY,
            tphi_q: f64::INFINITY,
            t1_c: f64::INFINITY,
            tphi_c: f64::INFINITY,
            nth_q: 0.0,
            nth_c: 0.0,
            higher_order: true,
            metadata: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.chi_qc, self.k_c, self.k_c_prime, self.chi_qc_prime];
        if rates.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("system couplings must be finite".into()));
        }
        for (name, t) in [
            ("t1_q", self.t1_q),
            ("tphi_q", self.tphi_q),
            ("t1_c", self.t1_c),
            ("tphi_c", self.tphi_c),
        ] {
            if !(t > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {t}")));
            }
        }
        for (name, n) in [("nth_q", self.nth_q), ("nth_c", self.nth_c)] {
            if !(0.0..0.5).contains(&n) {
                return Err(Error::Config(format!("{name} must lie in [0, 0.5), got {n}")));
            }
        }
        Ok(())
    }

    /// Cavity energy relaxation rate κ = 1/T1.
    pub fn kappa_c(&self) -> f64 {
        1.0 / self.t1_c
    }

    pub fn gamma_q(&self) -> f64 {
        1.0 / self.t1_q
    }

    /// Effective K′ and χ′ after the higher-order switch.
    fn higher(&self) -> (f64, f64) {
        if self.higher_order {
            (self.k_c_prime, self.chi_qc_prime)
        } else {
            (0.0, 0.0)
        }
    }

    /// Diagonal energy of |q, n⟩ (rad/s).
    pub fn level_energy(&self, excited: bool, n: usize) -> f64 {
        let (kp, chip) = self.higher();
        let nf = n as f64;
        let n2 = nf * (nf - 1.0);
        let n3 = n2 * (nf - 2.0);
        let mut e = -0.5 * self.k_c * n2 + kp / 6.0 * n3;
        if excited {
            e += -self.chi_qc * nf + 0.5 * chip * n2;
        }
        e
    }
}

/// Which subsystem a drive addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveTarget {
    Qubit,
    Cavity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveTerm {
    pub target: DriveTarget,
    /// Drive frequency minus the frame frequency (rad/s).
    pub detuning: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// H/ħ = −χ n̂|e⟩⟨e| − (K/2)a†²a² + (K′/6)a†³a³ + (χ′/2)|e⟩⟨e|a†²a².
pub fn dispersive_hamiltonian(p: &SystemParams, space: &Space) -> Result<Operator> {
    let n = space.require_qubit_cavity()?;
    let diag: Vec<C64> = (0..2)
        .flat_map(|q| (0..n).map(move |k| (q, k)))
        .map(|(q, k)| C64::new(p.level_energy(q == 1, k), 0.0))
        .collect();
    let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    Operator::new(space.clone(), m, "H0")
}

fn cavity_op(op: &Operator) -> Result<Operator> {
    Ok(tensor(&Operator::identity(Space::single(2)?), op))
}

/// Cavity annihilation operator on the qubit ⊗ cavity space.
pub fn cavity_a(space: &Space) -> Result<Operator> {
    let n = space.require_qubit_cavity()?;
    Ok(cavity_op(&annihilation(n)?)?.with_label("a"))
}

pub fn cavity_n(space: &Space) -> Result<Operator> {
    let n = space.require_qubit_cavity()?;
    Ok(cavity_op(&number(n)?)?.with_label("n"))
}

fn qubit_op(op: &Operator, space: &Space) -> Result<Operator> {
    let n = space.require_qubit_cavity()?;
    Ok(tensor(op, &Operator::identity(Space::single(n)?)).with_label(op.label().to_string()))
}

/// σ⁻ = |g⟩⟨e| on the qubit ⊗ cavity space.
pub fn qubit_lower(space: &Space) -> Result<Operator> {
    qubit_op(&sigma_minus(), space)
}

/// |e⟩⟨e| on the qubit ⊗ cavity space.
pub fn qubit_excited_projector(space: &Space) -> Result<Operator> {
    qubit_op(&proj_e(), space)
}

/// Lindblad decoherence channels that can be switched individually.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseChannels {
    pub cavity_decay: bool,
    pub cavity_heating: bool,
    pub cavity_dephasing: bool,
    pub qubit_decay: bool,
    pub qubit_heating: bool,
    pub qubit_dephasing: bool,
}

impl NoiseChannels {
    pub const ALL: NoiseChannels = NoiseChannels {
        cavity_decay: true,
        cavity_heating: true,
        cavity_dephasing: true,
        qubit_decay: true,
        qubit_heating: true,
        qubit_dephasing: true,
    };
    pub const NONE: NoiseChannels = NoiseChannels {
        cavity_decay: false,
        cavity_heating: false,
        cavity_dephasing: false,
        qubit_decay: false,
        qubit_heating: false,
        qubit_dephasing: false,
    };
    /// Cavity energy relaxation only.
    pub const CAVITY_DECAY: NoiseChannels = NoiseChannels { cavity_decay: true, ..Self::NONE };
}

/// The full Lindblad set for the given parameters.
pub fn collapse_operators(p: &SystemParams, space: &Space) -> Result<Vec<Operator>> {
    collapse_operators_with(p, space, NoiseChannels::ALL)
}

/// Collapse operators restricted to the selected channels. Channels with zero
/// rate are omitted.
pub fn collapse_operators_with(p: &SystemParams, space: &Space, ch: NoiseChannels) -> Result<Vec<Operator>> {
    let a = cavity_a(space)?;
    let n = cavity_n(space)?;
    let sm = qubit_lower(space)?;
    let pe = qubit_excited_projector(space)?;
    let kappa = p.kappa_c();
    let gamma = p.gamma_q();
    let entries = [
        (ch.cavity_decay, kappa * (1.0 + p.nth_c), a.clone(), "cavity decay"),
        (ch.cavity_heating, kappa * p.nth_c, a.dagger(), "cavity heating"),
        (ch.cavity_dephasing, 2.0 / p.tphi_c, n, "cavity dephasing"),
        (ch.qubit_decay, gamma * (1.0 + p.nth_q), sm.clone(), "qubit decay"),
        (ch.qubit_heating, gamma * p.nth_q, sm.dagger(), "qubit heating"),
        (ch.qubit_dephasing, 2.0 / p.tphi_q, pe, "qubit dephasing"),
    ];
    Ok(entries
        .into_iter()
        .filter(|(on, rate, _, _)| *on && *rate > 0.0 && rate.is_finite())
        .map(|(_, rate, op, label)| op.scaled(C64::new(rate.sqrt(), 0.0)).with_label(label))
        .collect())
}

/// Drive Hamiltonian at time t: Ω e^{−iδt−iφ} X⁺ + h.c. with X⁺ = |e⟩⟨g| or a†.
pub fn drive_hamiltonian(term: &DriveTerm, t: f64, space: &Space) -> Result<Operator> {
    let raise = match term.target {
        DriveTarget::Qubit => qubit_lower(space)?.dagger(),
        DriveTarget::Cavity => cavity_a(space)?.dagger(),
    };
    let c = term.amplitude * C64::from_polar(1.0, -term.detuning * t - term.phase);
    let m = raise.matrix().map(|x| x * c);
    let h = &m + m.adjoint();
    Operator::new(space.clone(), h, "drive")
}

/// Control Hamiltonians for the four drive quadratures: σx, σy, (a + a†), i(a − a†).
pub fn control_operators(space: &Space) -> Result<[CMatrix; 4]> {
    let sp = qubit_lower(space)?.dagger().into_matrix();
    let sx = &sp + sp.adjoint();
    // σy = i(σ⁻ − σ⁺) with σy|g⟩ = i|e⟩.
    let sy = (sp.adjoint() - &sp).map(|x| x * -I);
    let a = cavity_a(space)?.into_matrix();
    let cx = &a + a.adjoint();
    let cy = (&a - a.adjoint()).map(|x| x * I);
    Ok([sx, sy, cx, cy])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> Space {
        Space::qubit_cavity(6).unwrap()
    }

    fn idx(q: usize, n: usize) -> usize {
        q * 6 + n
    }

    #[test]
    fn hamiltonian_matrix_elements() {
        let mut p = SystemParams::zero();
        p.chi_qc = mhz(2.59);
        let h = dispersive_hamiltonian(&p, &space()).unwrap();
        let v = h.matrix()[(idx(1, 1), idx(1, 1))].re;
        assert!((v + 2.0 * std::f64::consts::PI * 2.59e6).abs() < 1e-6);

        let mut p = SystemParams::zero();
        p.k_c = khz(9.7);
        let h = dispersive_hamiltonian(&p, &space()).unwrap();
        let v = h.matrix()[(idx(0, 2), idx(0, 2))].re;
        assert!((v + 2.0 * std::f64::consts::PI * 9.7e3).abs() < 1e-9);

        let h = dispersive_hamiltonian(&SystemParams::zero(), &space()).unwrap();
        assert_eq!(h.matrix().norm(), 0.0);
    }

    #[test]
    fn hamiltonian_from_operators_matches_closed_form() {
        let p = SystemParams::reference();
        let s = space();
        let a = cavity_a(&s).unwrap().into_matrix();
        let ad = a.adjoint();
        let n = &ad * &a;
        let pe = qubit_excited_projector(&s).unwrap().into_matrix();
        let a2 = &ad * &ad * &a * &a;
        let a3 = &ad * &ad * &ad * &a * &a * &a;
        let c = |x: f64| C64::new(x, 0.0);
        let expect = (&pe * &n) * c(-p.chi_qc) + &a2 * c(-p.k_c / 2.0) + &a3 * c(p.k_c_prime / 6.0)
            + (&pe * &a2) * c(p.chi_qc_prime / 2.0);
        let h = dispersive_hamiltonian(&p, &s).unwrap();
        assert!((h.matrix() - expect).norm() < 1e-6);
        // Diagonal in the product basis commutes with n and |e⟩⟨e|.
        assert!((h.matrix() * &n - &n * h.matrix()).norm() == 0.0);
        // Qubit transition shifts by −χ per photon (without higher order).
        let mut q = p.clone();
        q.higher_order = false;
        let h = dispersive_hamiltonian(&q, &s).unwrap();
        let ev = h.matrix();
        for k in 0..4 {
            let f0 = ev[(idx(1, k), idx(1, k))].re - ev[(idx(0, k), idx(0, k))].re;
            let f1 = ev[(idx(1, k + 1), idx(1, k + 1))].re - ev[(idx(0, k + 1), idx(0, k + 1))].re;
            assert!((f1 - f0 + q.chi_qc).abs() < 1e-6);
        }
    }

    #[test]
    fn collapse_rates() {
        let p = SystemParams::reference();
        let kappa_hz = p.kappa_c() / (2.0 * std::f64::consts::PI);
        assert!((kappa_hz - 275.4).abs() < 1.0);
        let mut q = p.clone();
        q.nth_c = 0.0;
        let ops = collapse_operators(&q, &space()).unwrap();
        assert!(ops.iter().all(|o| o.label() != "cavity heating"));
        let ops = collapse_operators(&p, &space()).unwrap();
        let rate = |label: &str| {
            let o = ops.iter().find(|o| o.label() == label).unwrap();
            o.matrix().iter().map(|x| x.norm_sqr()).fold(0.0, f64::max)
        };
        // Detailed balance: heating/decay = n_th / (1 + n_th) on the same matrix element.
        let up = ops.iter().find(|o| o.label() == "cavity heating").unwrap().matrix()[(1, 0)].norm_sqr();
        let down = ops.iter().find(|o| o.label() == "cavity decay").unwrap().matrix()[(0, 1)].norm_sqr();
        assert!((up / down - p.nth_c / (1.0 + p.nth_c)).abs() < 1e-12);
        assert!(rate("qubit dephasing") > 0.0);
    }

    #[test]
    fn drive_forms() {
        let s = space();
        let term = DriveTerm { target: DriveTarget::Qubit, detuning: 0.0, amplitude: 3.0, phase: 0.0 };
        let h = drive_hamiltonian(&term, 1.234, &s).unwrap();
        let sx = control_operators(&s).unwrap()[0].map(|x| x * 3.0);
        assert!((h.matrix() - sx).norm() < 1e-14);
        let term = DriveTerm { target: DriveTarget::Cavity, detuning: 2.0e6, amplitude: 1.5, phase: 0.4 };
        let h0 = drive_hamiltonian(&term, 0.0, &s).unwrap();
        let h1 = drive_hamiltonian(&term, 2.0 * std::f64::consts::PI / 2.0e6, &s).unwrap();
        assert!((h0.matrix() - h1.matrix()).norm() < 1e-9);
        assert!(h0.is_hermitian(1e-14));
    }
}
