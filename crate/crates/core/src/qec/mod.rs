// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Repetitive error correction of the binomial code with parity syndromes and
//! feedback.
//!
//! One layer of a cycle is: wait (optionally with the PASS drive) → parity
//! map → ancilla readout → feedback latency → policy actions → idle padding.
//! One-layer cycles repeat a single layer; two-layer cycles chain two, the
//! first of which only restores the deformed code space.
//!
//! Three physics presets are provided:
//!
//! - [`QecCycleConfig::ideal`]: no decoherence, ideal parity map and readout.
//! - [`QecCycleConfig::budget_matched`]: cavity loss, cavity heating and Kerr
//!   with an effective (adiabatically eliminated) PASS drive, ideal readout,
//!   plus operation errors injected as logical depolarization with the
//!   error-budget magnitudes.
//! - [`QecCycleConfig::full`]: every decoherence channel, the driven PASS
//!   tone with ramps, and the reference readout model.

mod cycle;
mod experiment;
mod fit;
mod tomography;

pub use cycle::{CycleRecord, DensityCycle, DensityEngine, LayerOutcome, QecEngine};
pub use experiment::{
    baseline_lifetimes, branch_samples, run_repetitive, sweep_waiting_time, Baseline, Engine, FidelityPoint,
    FidelityTable, RepetitiveOptions, RepetitiveRun, SweepPoint, SweepTable, TomographyMode,
};
pub use fit::{fit_decay, DecayFit, DECAY_OFFSET};
pub use tomography::{
    bloch_of, bloch_on, bloch_on_density, normalized_fidelity, paulis, process_tomography, ptm_from_cardinal, Bloch,
    ProcessMatrix, POSITIVITY_TOLERANCE,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::budget::{Layers, OperationErrors};
use crate::code::{calibrate_pass, default_pass_sweep, PassCalibration};
use crate::comb::{CombSpec, COMB_DT};
use crate::dynamics::{MeasurementModel, PiecewisePulse};
use crate::quantum::Qubit;
use crate::system::{NoiseChannels, SystemParams};
use crate::units::{NS, US};
use crate::{Error, Result};

/// Recovery-pulse roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    U0,
    U1,
    U2,
    U3,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::U0, Role::U1, Role::U2, Role::U3];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "U{}", self.index())
    }
}

/// How a recovery role is realized.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// An instantaneous unitary calibrated numerically from the cycle's own
    /// no-jump and single-jump reference evolutions.
    Ideal,
    /// A control pulse evolved under the drift, controls and decoherence.
    Pulse(PiecewisePulse),
}

/// A feedback action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    /// Ideal ancilla π flip returning |e⟩ to |g⟩.
    ResetPi,
    Apply(Role),
}

/// Outcome → action mapping for every layer. An empty list means "none".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackPolicy {
    /// Per layer, the actions for reported g and reported e.
    layers: Vec<[Vec<Action>; 2]>,
}

impl FeedbackPolicy {
    pub fn new(layers: Vec<[Vec<Action>; 2]>) -> Result<Self> {
        if layers.is_empty() || layers.len() > 2 {
            return Err(Error::Config(format!("a policy covers 1 or 2 layers, got {}", layers.len())));
        }
        Ok(Self { layers })
    }

    /// One layer: g → U0; e → reset, U1. Two layers: g → none, e → reset, U1;
    /// then g → U2, e → reset, U3.
    pub fn default_for(layers: Layers) -> Self {
        use Action::*;
        let l = match layers {
            Layers::One => vec![[vec![Apply(Role::U0)], vec![ResetPi, Apply(Role::U1)]]],
            Layers::Two => vec![
                [vec![], vec![ResetPi, Apply(Role::U1)]],
                [vec![Apply(Role::U2)], vec![ResetPi, Apply(Role::U3)]],
            ],
        };
        Self { layers: l }
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn actions(&self, layer: usize, reported: Qubit) -> &[Action] {
        &self.layers[layer][reported.index()]
    }

    /// Roles referenced anywhere in the policy.
    pub fn roles(&self) -> BTreeSet<Role> {
        self.layers
            .iter()
            .flatten()
            .flatten()
            .filter_map(|a| match a {
                Action::Apply(r) => Some(*r),
                Action::ResetPi => None,
            })
            .collect()
    }
}

/// When the feedback actions of a layer run within its idle padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionTiming {
    /// Right after the feedback latency (default).
    AfterLatency,
    /// At the end of the layer, just before the next wait.
    EndOfSlot,
}

/// How the PASS idle drive is simulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassModel {
    /// Diagonal dressed-energy Hamiltonian; the ancilla stays in |g⟩.
    Effective,
    /// The detuned tone itself with raised-cosine ramps of the given length.
    Driven { ramp: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassDrive {
    pub calibration: PassCalibration,
    pub model: PassModel,
}

/// How the parity syndrome is mapped onto the ancilla.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityMap {
    /// The simulated frequency-comb pulse.
    Comb,
    /// An exact parity-controlled flip followed by an idle of the comb length.
    Ideal,
}

/// Operation errors injected as logical depolarization ρ ↦ (1 − p)ρ + p·I/2
/// on the code space (identity elsewhere).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectedErrors {
    pub operations: OperationErrors,
    /// Per PASS drive (ancilla excitation allowance).
    pub pass_allowance: f64,
    /// Inject the ancilla thermal error n_th(1 − e^{−T/T1}) once per cycle.
    pub thermal: bool,
}

impl InjectedErrors {
    /// Only the PASS allowance, as used for intrinsic-error estimates.
    pub fn pass_only() -> Self {
        Self {
            operations: OperationErrors { detection: [0.0; 2], recovery: [0.0; 4], reset: 0.0 },
            pass_allowance: 0.01,
            thermal: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let o = &self.operations;
        let all = o.detection.iter().chain(&o.recovery).chain([&o.reset, &self.pass_allowance]);
        for &p in all {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("injected error {p} is not a probability")));
            }
        }
        Ok(())
    }
}

impl Default for InjectedErrors {
    fn default() -> Self {
        Self { operations: OperationErrors::default(), pass_allowance: 0.01, thermal: true }
    }
}

/// Timings, physics and recovery resources of a QEC cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct QecCycleConfig {
    pub params: SystemParams,
    pub layers: Layers,
    /// Cavity truncation.
    pub n_fock: usize,
    /// Idle waiting time per layer (s).
    pub t_wait: f64,
    pub comb: CombSpec,
    pub comb_dt: f64,
    pub parity_map: ParityMap,
    pub readout: MeasurementModel,
    pub latency: f64,
    pub reset_duration: f64,
    pub recovery_duration: f64,
    /// Remaining idle per layer so the slot adds up to the nominal cycle.
    pub extra_idle: f64,
    pub recoveries: BTreeMap<Role, Gate>,
    pub pass: Option<PassDrive>,
    pub noise: NoiseChannels,
    pub injected: Option<InjectedErrors>,
    pub action_timing: ActionTiming,
}

/// PASS drive detuning used by the presets, in units of −χ.
pub const PASS_DETUNING_CHI: f64 = 3.5;

impl QecCycleConfig {
    fn base(params: SystemParams, layers: Layers) -> Self {
        let comb = CombSpec::reference(params.chi_qc);
        let recoveries = FeedbackPolicy::default_for(layers).roles().into_iter().map(|r| (r, Gate::Ideal)).collect();
        Self {
            params,
            layers,
            n_fock: 12,
            t_wait: 90.0 * US,
            comb,
            comb_dt: COMB_DT,
            parity_map: ParityMap::Comb,
            readout: MeasurementModel::ideal(600.0 * NS),
            latency: 511.0 * NS,
            reset_duration: 20.0 * NS,
            recovery_duration: 770.0 * NS,
            extra_idle: 304.0 * NS,
            recoveries,
            pass: None,
            noise: NoiseChannels::NONE,
            injected: None,
            action_timing: ActionTiming::AfterLatency,
        }
    }

    fn calibrated_pass(params: &SystemParams, model: PassModel) -> Result<PassDrive> {
        let cal = calibrate_pass(params, -PASS_DETUNING_CHI * params.chi_qc, &default_pass_sweep())?;
        Ok(PassDrive { calibration: cal, model })
    }

    /// No decoherence, exact parity map, ideal readout, effective PASS.
    pub fn ideal(params: SystemParams, layers: Layers) -> Result<Self> {
        let pass = Self::calibrated_pass(&params, PassModel::Effective)?;
        Ok(Self { parity_map: ParityMap::Ideal, pass: Some(pass), ..Self::base(params, layers) })
    }

    /// Cavity loss, heating and Kerr with effective PASS, ideal readout, and
    /// operation errors injected with the error-budget magnitudes.
    pub fn budget_matched(params: SystemParams, layers: Layers) -> Result<Self> {
        let pass = Self::calibrated_pass(&params, PassModel::Effective)?;
        Ok(Self {
            pass: Some(pass),
            noise: NoiseChannels { cavity_decay: true, cavity_heating: true, ..NoiseChannels::NONE },
            injected: Some(InjectedErrors::default()),
            ..Self::base(params, layers)
        })
    }

    /// The budget-matched physics with only the PASS allowance injected.
    pub fn intrinsic(params: SystemParams, layers: Layers) -> Result<Self> {
        Ok(Self { injected: Some(InjectedErrors::pass_only()), ..Self::budget_matched(params, layers)? })
    }

    /// All decoherence channels, driven PASS with 500 ns ramps, reference readout.
    pub fn full(params: SystemParams, layers: Layers) -> Result<Self> {
        let pass = Self::calibrated_pass(&params, PassModel::Driven { ramp: 500.0 * NS })?;
        Ok(Self {
            pass: Some(pass),
            noise: NoiseChannels::ALL,
            readout: MeasurementModel::reference(),
            ..Self::base(params, layers)
        })
    }

    /// Duration of one layer slot.
    pub fn slot_duration(&self) -> f64 {
        self.t_wait
            + self.comb.duration
            + self.readout.duration
            + self.latency
            + self.reset_duration
            + self.recovery_duration
            + self.extra_idle
    }

    /// Duration of a full cycle (all layers).
    pub fn cycle_duration(&self) -> f64 {
        self.layers.count() as f64 * self.slot_duration()
    }

    pub fn validate(&self, policy: &FeedbackPolicy) -> Result<()> {
        self.params.validate()?;
        self.comb.validate()?;
        self.readout.validate()?;
        for (name, v) in [
            ("t_wait", self.t_wait),
            ("readout duration", self.readout.duration),
            ("latency", self.latency),
            ("reset duration", self.reset_duration),
            ("recovery duration", self.recovery_duration),
            ("comb step", self.comb_dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v:e}")));
            }
        }
        if !(self.extra_idle >= 0.0) {
            return Err(Error::Config(format!("extra idle must be non-negative, got {:e}", self.extra_idle)));
        }
        if self.n_fock < 7 {
            return Err(Error::Config(format!("the binomial code needs at least 7 Fock levels, got {}", self.n_fock)));
        }
        if policy.layer_count() != self.layers.count() {
            return Err(Error::Config(format!(
                "policy covers {} layers but the cycle has {}",
                policy.layer_count(),
                self.layers.count()
            )));
        }
        for r in policy.roles() {
            if !self.recoveries.contains_key(&r) {
                return Err(Error::MissingRole(r.to_string()));
            }
        }
        if let Some(PassDrive { model: PassModel::Driven { ramp }, .. }) = &self.pass {
            if !(*ramp > 0.0) || 2.0 * ramp >= self.t_wait {
                return Err(Error::Config(format!("PASS ramp {ramp:e} s does not fit in t_wait {:e} s", self.t_wait)));
            }
        }
        if let Some(inj) = &self.injected {
            inj.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_cycle_duration() {
        let c = QecCycleConfig::budget_matched(SystemParams::reference(), Layers::One).unwrap();
        assert!((c.cycle_duration() - 92.46 * US).abs() < 1e-12);
        let c2 = QecCycleConfig::budget_matched(SystemParams::reference(), Layers::Two).unwrap();
        assert!((c2.cycle_duration() - 184.92 * US).abs() < 1e-12);
    }

    #[test]
    fn policy_roles_must_be_present() {
        let mut c = QecCycleConfig::ideal(SystemParams::reference(), Layers::Two).unwrap();
        let p = FeedbackPolicy::default_for(Layers::Two);
        c.validate(&p).unwrap();
        assert_eq!(p.roles().into_iter().collect::<Vec<_>>(), vec![Role::U1, Role::U2, Role::U3]);
        c.recoveries.remove(&Role::U3);
        assert!(matches!(c.validate(&p), Err(Error::MissingRole(_))));
        assert!(c.validate(&FeedbackPolicy::default_for(Layers::One)).is_err());
    }
}
