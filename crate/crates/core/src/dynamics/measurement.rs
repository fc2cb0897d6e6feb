// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::quantum::{CMatrix, CVector, Qubit, StateVector, C64};
use crate::rng::Rng;
use crate::{Error, Result};

/// Phenomenological single-shot ancilla readout.
///
/// The true outcome is Born-sampled. The reported outcome is flipped with the
/// assignment error of the true state, and the post-measurement ancilla is
/// flipped with the QND-violation probability of the true state. The two
/// flips are independent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    /// P(report e | g).
    pub assign_err_g: f64,
    /// P(report g | e).
    pub assign_err_e: f64,
    /// P(ancilla ends in e | projected onto g).
    pub qnd_flip_g: f64,
    /// P(ancilla ends in g | projected onto e).
    pub qnd_flip_e: f64,
    /// Readout duration (s).
    pub duration: f64,
}

impl MeasurementModel {
    pub fn ideal(duration: f64) -> Self {
        Self { assign_err_g: 0.0, assign_err_e: 0.0, qnd_flip_g: 0.0, qnd_flip_e: 0.0, duration }
    }

    /// Reference device readout: fidelities 0.998/0.988 and QNDness
    /// 0.998/0.972 for g/e, 600 ns long.
    pub fn reference() -> Self {
        Self { assign_err_g: 0.002, assign_err_e: 0.012, qnd_flip_g: 0.002, qnd_flip_e: 0.028, duration: 600e-9 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("assign_err_g", self.assign_err_g),
            ("assign_err_e", self.assign_err_e),
            ("qnd_flip_g", self.qnd_flip_g),
            ("qnd_flip_e", self.qnd_flip_e),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be a probability, got {p}")));
            }
        }
        if !(self.duration >= 0.0) {
            return Err(Error::Config(format!("readout duration must be non-negative, got {}", self.duration)));
        }
        Ok(())
    }

    pub fn assign_err(&self, q: Qubit) -> f64 {
        match q {
            Qubit::G => self.assign_err_g,
            Qubit::E => self.assign_err_e,
        }
    }

    pub fn qnd_flip(&self, q: Qubit) -> f64 {
        match q {
            Qubit::G => self.qnd_flip_g,
            Qubit::E => self.qnd_flip_e,
        }
    }

    /// P(report r | true q).
    pub fn report_prob(&self, reported: Qubit, truth: Qubit) -> f64 {
        let e = self.assign_err(truth);
        if reported == truth {
            1.0 - e
        } else {
            e
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeasurementResult {
    pub reported: Qubit,
    pub true_outcome: Qubit,
    pub post_state: StateVector,
}

/// Ancilla projection probability P(q) of a qubit ⊗ cavity amplitude vector.
pub(crate) fn ancilla_prob(amps: &CVector, n_fock: usize, q: Qubit) -> f64 {
    amps.rows(q.index() * n_fock, n_fock).norm_squared()
}

/// Project onto ancilla state `q`, normalize, and optionally flip the ancilla.
pub(crate) fn project(amps: &CVector, n_fock: usize, q: Qubit, flip: bool) -> CVector {
    let block = amps.rows(q.index() * n_fock, n_fock);
    let norm = block.norm();
    let target = if flip { q.flipped() } else { q };
    let mut out = CVector::zeros(2 * n_fock);
    out.rows_mut(target.index() * n_fock, n_fock).copy_from(&block.unscale(norm));
    out
}

/// Projective ancilla readout with assignment and QND errors. The timed idle
/// that accompanies readout is applied by the caller (see
/// [`Trajectory::measure_ancilla`](super::Trajectory::measure_ancilla)).
pub fn measure_ancilla(state: &StateVector, model: &MeasurementModel, rng: &mut Rng) -> Result<MeasurementResult> {
    let n = state.space().require_qubit_cavity()?;
    let amps = state.amplitudes();
    let total = amps.norm_squared();
    let p_g = ancilla_prob(amps, n, Qubit::G) / total;
    let truth = if rng.random::<f64>() < p_g { Qubit::G } else { Qubit::E };
    let flip = rng.random::<f64>() < model.qnd_flip(truth);
    let misassign = rng.random::<f64>() < model.assign_err(truth);
    let reported = if misassign { truth.flipped() } else { truth };
    let post = StateVector::new(state.space().clone(), project(amps, n, truth, flip))?;
    Ok(MeasurementResult { reported, true_outcome: truth, post_state: post })
}

/// Unnormalized post-measurement state conditioned on a reported outcome;
/// its trace is the probability of that report.
#[derive(Clone, Debug)]
pub struct MeasurementBranch {
    pub reported: Qubit,
    pub rho: CMatrix,
}

impl MeasurementBranch {
    pub fn probability(&self) -> f64 {
        self.rho.trace().re
    }
}

/// Density-matrix readout: returns the two reported-outcome branches.
pub fn measure_ancilla_density(rho: &CMatrix, n_fock: usize, model: &MeasurementModel) -> [MeasurementBranch; 2] {
    let d = 2 * n_fock;
    let projected = |q: Qubit| -> CMatrix {
        let o = q.index() * n_fock;
        let mut out = CMatrix::zeros(d, d);
        out.view_mut((o, o), (n_fock, n_fock)).copy_from(&rho.view((o, o), (n_fock, n_fock)));
        out
    };
    let flipped = |m: &CMatrix| -> CMatrix {
        let mut out = CMatrix::zeros(d, d);
        for (qa, qb) in [(0usize, 1usize), (1, 0)] {
            for (ra, rb) in [(0usize, 1usize), (1, 0)] {
                out.view_mut((qb * n_fock, rb * n_fock), (n_fock, n_fock))
                    .copy_from(&m.view((qa * n_fock, ra * n_fock), (n_fock, n_fock)));
            }
        }
        out
    };
    let post = |q: Qubit| -> CMatrix {
        let p = projected(q);
        let f = model.qnd_flip(q);
        &p * C64::new(1.0 - f, 0.0) + flipped(&p) * C64::new(f, 0.0)
    };
    let posts = [post(Qubit::G), post(Qubit::E)];
    [Qubit::G, Qubit::E].map(|r| {
        let rho_r = &posts[0] * C64::new(model.report_prob(r, Qubit::G), 0.0)
            + &posts[1] * C64::new(model.report_prob(r, Qubit::E), 0.0);
        MeasurementBranch { reported: r, rho: rho_r }
    })
}
