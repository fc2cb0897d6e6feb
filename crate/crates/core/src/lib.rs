// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Desk-scale simulation of discrete-variable bosonic error correction with the
//! lowest-order binomial code.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantum`]: truncated Fock-space linear algebra (states, operators,
//!   matrix exponentials, partial traces, fidelities, Wigner functions).
//! - [`system`]: the dispersive qubit–cavity Hamiltonian, drives and Lindblad
//!   collapse operators.
//! - [`dynamics`]: master-equation, unitary and quantum-jump evolution engines,
//!   plus the phenomenological ancilla readout model.
//! - [`comb`]: frequency-comb parity mapping and the Ramsey baseline.
//! - [`code`]: binomial codewords, no-jump deformation, recovery maps and the
//!   photon-number-resolved Stark shift (PASS) calibration.
//! - [`grape`]: gradient-based optimal control for state-transfer sets.
//! - [`qec`]: repetitive error-correction cycles with feedback, process
//!   tomography, decay fits, baselines and waiting-time sweeps.
//! - [`budget`]: the analytic per-branch error budget and lifetime model.
//! - [`config`]: the structured run configuration shared with the CLI.

pub mod budget;
pub mod code;
pub mod comb;
pub mod config;
pub mod dynamics;
mod error;
pub mod grape;
pub mod qec;
pub mod quantum;
pub mod rng;
pub mod system;
pub mod units;

pub use error::{Error, Result};
