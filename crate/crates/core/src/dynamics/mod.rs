// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution: master equation, Schrödinger propagation and quantum-jump
//! trajectories with mid-circuit measurement.
//!
//! Drives are described either analytically (a closure returning H(t)) or as a
//! [`Schedule`] of piecewise-constant Hamiltonian segments. Schedules are the
//! workhorse of the protocol simulations: they are compiled once into block
//! propagators and replayed for every trajectory.

mod lindblad;
mod measurement;
mod pulse;
mod schedule;
mod trajectory;
mod unitary;

pub use lindblad::{evolve_lindblad, liouvillian, lindblad_rhs, LindbladPropagator};
pub use measurement::{measure_ancilla, measure_ancilla_density, MeasurementBranch, MeasurementModel, MeasurementResult};
pub use pulse::{Channel, PiecewisePulse};
pub use schedule::{MeProgram, Schedule, Segment};
pub use trajectory::{
    mc_trajectory, CompiledSchedule, EventAction, JumpEvent, MeasurementEvent, TimedEvent, Trajectory,
    TrajectoryRecord,
};
pub use unitary::{evolve_unitary, Drive};

use crate::quantum::{hermitian_norm, CMatrix};
use crate::{Error, Result};

/// Largest allowed dt·‖H‖ for fixed-step integrators.
pub const STEP_LIMIT: f64 = 0.1;

/// Default integrator step: min(1 ns, 1/(20·‖H‖)).
pub fn default_dt(h: &CMatrix) -> f64 {
    let w = hermitian_norm(h);
    if w > 0.0 {
        (1.0 / (20.0 * w)).min(1e-9)
    } else {
        1e-9
    }
}

pub(crate) fn check_step(h: &CMatrix, dt: f64, duration: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() || !(duration >= 0.0) || (duration > 0.0 && dt > duration) {
        return Err(Error::Config(format!("step {dt:e} s invalid for duration {duration:e} s")));
    }
    let w = hermitian_norm(h);
    if dt * w >= STEP_LIMIT {
        return Err(Error::Config(format!(
            "step {dt:e} s does not resolve ‖H‖ = {w:.3e} rad/s (dt·‖H‖ = {:.3} ≥ {STEP_LIMIT})",
            dt * w
        )));
    }
    Ok(())
}
