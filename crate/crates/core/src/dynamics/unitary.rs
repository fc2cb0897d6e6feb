// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::quantum::{expm, same_space, CMatrix, Operator, StateVector, C64};
use crate::{Error, Result};

use super::{check_step, PiecewisePulse};

/// Time-dependent part of a Schrödinger evolution.
pub enum Drive<'a> {
    None,
    /// Piecewise-constant pulse on the given control Hamiltonians; time after
    /// the pulse ends evolves under the static Hamiltonian alone.
    Piecewise { pulse: &'a PiecewisePulse, controls: &'a [CMatrix; 4] },
    /// H(t) added to the static part, sampled at step midpoints.
    Analytic { h_t: &'a dyn Fn(f64) -> CMatrix, dt: f64 },
}

pub fn evolve_unitary(psi0: &StateVector, h_static: &Operator, drive: Drive<'_>, duration: f64) -> Result<StateVector> {
    same_space(psi0.space(), h_static.space())?;
    if !(duration >= 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be non-negative, got {duration}")));
    }
    let h0 = h_static.matrix();
    let mut psi = psi0.amplitudes().clone();
    let step = |h: &CMatrix, t: f64| expm(&(h * C64::new(0.0, -t)));
    match drive {
        Drive::None => {
            psi = step(h0, duration)? * psi;
        }
        Drive::Piecewise { pulse, controls } => {
            let tp = pulse.duration();
            if duration + 1e-15 * tp < tp {
                return Err(Error::InvalidArgument(format!(
                    "duration {duration:e} s shorter than the pulse ({tp:e} s)"
                )));
            }
            for k in 0..pulse.n_segments() {
                psi = step(&pulse.segment_hamiltonian(h0, controls, k), pulse.dt())? * psi;
            }
            let rest = duration - tp;
            if rest > 0.0 {
                psi = step(h0, rest)? * psi;
            }
        }
        Drive::Analytic { h_t, dt } => {
            check_step(&(h0 + h_t(0.0)), dt, duration)?;
            let steps = (duration / dt).ceil() as usize;
            let h = duration / steps.max(1) as f64;
            for k in 0..steps {
                let mid = (k as f64 + 0.5) * h;
                psi = step(&(h0 + h_t(mid)), h)? * psi;
            }
        }
    }
    StateVector::new(psi0.space().clone(), psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{pure_fidelity, sigma_x, CVector, Space};

    #[test]
    fn diagonal_phases() {
        let space = Space::single(3).unwrap();
        let e = [0.0, 1.3e6, -2.1e6];
        let h = Operator::new(
            space.clone(),
            CMatrix::from_diagonal(&CVector::from_iterator(3, e.iter().map(|&x| C64::new(x, 0.0)))),
            "H",
        )
        .unwrap();
        let amp = C64::new(1.0 / 3f64.sqrt(), 0.0);
        let psi = StateVector::new(space, CVector::from_element(3, amp)).unwrap();
        let t = 2.7e-6;
        let out = evolve_unitary(&psi, &h, Drive::None, t).unwrap();
        for k in 0..3 {
            let expect = amp * C64::from_polar(1.0, -e[k] * t);
            assert!((out.amplitudes()[k] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn resonant_pi_pulse() {
        let space = Space::single(2).unwrap();
        let h = Operator::zeros(space.clone());
        let omega = 2.0 * std::f64::consts::PI * 5e6;
        let sx = sigma_x().into_matrix();
        let drive = move |_t: f64| &sx * C64::new(omega, 0.0);
        // σx rotation angle 2Ωt = π.
        let t = std::f64::consts::PI / (2.0 * omega);
        let g = StateVector::basis(space.clone(), 0).unwrap();
        let out = evolve_unitary(&g, &h, Drive::Analytic { h_t: &drive, dt: t / 50.0 }, t).unwrap();
        let e = StateVector::basis(space, 1).unwrap();
        assert!(pure_fidelity(&out, &e).unwrap() > 1.0 - 1e-8);
        assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn composition_property() {
        let space = Space::single(2).unwrap();
        let h = Operator::new(space.clone(), sigma_x().into_matrix() * C64::new(3e6, 0.0), "H").unwrap();
        let psi = StateVector::basis(space, 0).unwrap();
        let full = evolve_unitary(&psi, &h, Drive::None, 1e-6).unwrap();
        let half = evolve_unitary(&psi, &h, Drive::None, 0.5e-6).unwrap();
        let twice = evolve_unitary(&half, &h, Drive::None, 0.5e-6).unwrap();
        assert!((full.amplitudes() - twice.amplitudes()).norm() < 1e-10);
    }
}
