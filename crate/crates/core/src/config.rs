// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Structured run configuration in TOML with human units (MHz, kHz, µs, ns).
//!
//! Every table rejects unknown keys. Missing keys fall back to the reference
//! device values, so a config file may list only what it changes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::budget::{ErrorBudgetInputs, Layers, OperationErrors};
use crate::comb::{CombSpec, ParityMapOptions};
use crate::dynamics::MeasurementModel;
use crate::grape::{drift_hash, read_pulse_csv, OptimizerConfig};
use crate::qec::{ActionTiming, Engine, FeedbackPolicy, Gate, QecCycleConfig, RepetitiveOptions, Role, TomographyMode};
use crate::quantum::Space;
use crate::system::{dispersive_hamiltonian, SystemParams};
use crate::units::{khz, mhz, to_hz, NS, US};
use crate::{Error, Result};

/// Top-level run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Directory for CSV artifacts and manifests.
    pub output_dir: PathBuf,
    pub system: SystemSection,
    pub readout: ReadoutSection,
    pub comb: CombSection,
    pub qec: QecSection,
    pub grape: GrapeSection,
    pub budget: BudgetSection,
    pub wigner: WignerSection,
    /// Directory that relative pulse paths resolve against (the config file's).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20260101,
            output_dir: PathBuf::from("out"),
            system: SystemSection::default(),
            readout: ReadoutSection::default(),
            comb: CombSection::default(),
            qec: QecSection::default(),
            grape: GrapeSection::default(),
            budget: BudgetSection::default(),
            wigner: WignerSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Device parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub chi_qc_mhz: f64,
    pub k_c_khz: f64,
    pub k_c_prime_khz: f64,
    pub chi_qc_prime_khz: f64,
    pub t1_q_us: f64,
    pub tphi_q_us: f64,
    pub t1_c_us: f64,
    pub tphi_c_us: f64,
    pub nth_q: f64,
    pub nth_c: f64,
    pub higher_order: bool,
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = SystemParams::reference();
        Self {
            chi_qc_mhz: to_hz(p.chi_qc) / 1e6,
            k_c_khz: to_hz(p.k_c) / 1e3,
            k_c_prime_khz: to_hz(p.k_c_prime) / 1e3,
            chi_qc_prime_khz: to_hz(p.chi_qc_prime) / 1e3,
            t1_q_us: p.t1_q / US,
            tphi_q_us: p.tphi_q / US,
            t1_c_us: p.t1_c / US,
            tphi_c_us: p.tphi_c / US,
            nth_q: p.nth_q,
            nth_c: p.nth_c,
            higher_order: p.higher_order,
        }
    }
}

impl SystemSection {
    pub fn params(&self) -> Result<SystemParams> {
        let p = SystemParams {
            chi_qc: mhz(self.chi_qc_mhz),
            k_c: khz(self.k_c_khz),
            k_c_prime: khz(self.k_c_prime_khz),
            chi_qc_prime: khz(self.chi_qc_prime_khz),
            t1_q: self.t1_q_us * US,
            tphi_q: self.tphi_q_us * US,
            t1_c: self.t1_c_us * US,
            tphi_c: self.tphi_c_us * US,
            nth_q: self.nth_q,
            nth_c: self.nth_c,
            higher_order: self.higher_order,
            metadata: None,
        };
        p.validate().map_err(|e| section_error("system", e))?;
        Ok(p)
    }
}

/// Ancilla readout model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutSection {
    pub assign_err_g: f64,
    pub assign_err_e: f64,
    pub qnd_flip_g: f64,
    pub qnd_flip_e: f64,
    pub duration_ns: f64,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        let m = MeasurementModel::reference();
        Self {
            assign_err_g: m.assign_err_g,
            assign_err_e: m.assign_err_e,
            qnd_flip_g: m.qnd_flip_g,
            qnd_flip_e: m.qnd_flip_e,
            duration_ns: m.duration / NS,
        }
    }
}

impl ReadoutSection {
    pub fn model(&self) -> Result<MeasurementModel> {
        let m = MeasurementModel {
            assign_err_g: self.assign_err_g,
            assign_err_e: self.assign_err_e,
            qnd_flip_g: self.qnd_flip_g,
            qnd_flip_e: self.qnd_flip_e,
            duration: self.duration_ns * NS,
        };
        m.validate().map_err(|e| section_error("readout", e))?;
        Ok(m)
    }
}

/// Comb parity pulse and its characterization sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombSection {
    pub m_pairs: usize,
    /// Tone amplitude Ω in units of χ.
    pub omega_over_chi: f64,
    pub duration_ns: f64,
    pub delay_ns: f64,
    pub edge_ns: f64,
    /// Per-pair amplitude scalings (empty means all 1).
    pub scalings: Vec<f64>,
    pub dt_ns: f64,
    /// Delays evaluated by the delay sweep.
    pub delay_grid_ns: Vec<f64>,
    pub n_fock: usize,
    /// Fock states 0..report_fock get individual parity errors.
    pub report_fock: usize,
    /// Length of the finite unconditional pulses of the Ramsey baseline.
    pub ramsey_pulse_ns: f64,
    /// Fock states 0..compare_fock enter the comb-vs-Ramsey table.
    pub compare_fock: usize,
}

impl Default for CombSection {
    fn default() -> Self {
        let s = CombSpec::reference(1.0);
        Self {
            m_pairs: s.m_pairs,
            omega_over_chi: 0.25,
            duration_ns: s.duration / NS,
            delay_ns: s.delay / NS,
            edge_ns: s.edge / NS,
            scalings: Vec::new(),
            dt_ns: 0.25,
            delay_grid_ns: vec![0.0, 10.0, 20.0, 30.0, 40.0, 47.0, 50.0, 60.0, 70.0],
            n_fock: 12,
            report_fock: 6,
            ramsey_pulse_ns: 20.0,
            compare_fock: 10,
        }
    }
}

impl CombSection {
    pub fn spec(&self, params: &SystemParams) -> Result<CombSpec> {
        let chi = params.chi_qc;
        let s = CombSpec {
            m_pairs: self.m_pairs,
            chi,
            omega: self.omega_over_chi * chi,
            duration: self.duration_ns * NS,
            delay: self.delay_ns * NS,
            edge: self.edge_ns * NS,
            scalings: self.scalings.clone(),
        };
        s.validate().map_err(|e| section_error("comb", e))?;
        Ok(s)
    }

    pub fn dt(&self) -> f64 {
        self.dt_ns * NS
    }

    pub fn parity_options(&self, decoherence: bool, readout: Option<MeasurementModel>) -> ParityMapOptions {
        ParityMapOptions { decoherence, readout, n_fock: self.n_fock, report_fock: self.report_fock, dt: self.dt() }
    }
}

/// Physics preset of the QEC cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QecMode {
    Ideal,
    BudgetMatched,
    Intrinsic,
    Full,
}

/// Repetitive QEC runs and the waiting-time sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QecSection {
    pub mode: QecMode,
    pub layers: usize,
    pub n_fock: usize,
    pub t_wait_us: f64,
    pub cycles: usize,
    /// Tomography snapshot every `stride` cycles.
    pub stride: usize,
    pub trajectories: usize,
    /// Use the master equation instead of trajectories.
    pub master_equation: bool,
    pub action_timing: ActionTiming,
    pub sweep_grid_us: Vec<f64>,
    /// Approximate simulated time per sweep point.
    pub sweep_window_us: f64,
    /// Optional pulse files for recovery roles ("U0".."U3"); others stay ideal.
    pub recovery_pulses: BTreeMap<String, PathBuf>,
}

impl Default for QecSection {
    fn default() -> Self {
        let mut sweep_grid_us = vec![1.0];
        sweep_grid_us.extend((2..=24).map(|i| 10.0 * i as f64));
        sweep_grid_us.extend([320.0, 400.0]);
        Self {
            mode: QecMode::BudgetMatched,
            layers: 1,
            n_fock: 12,
            t_wait_us: 90.0,
            cycles: 12,
            stride: 1,
            trajectories: 500,
            master_equation: false,
            action_timing: ActionTiming::AfterLatency,
            sweep_grid_us,
            sweep_window_us: 1100.0,
            recovery_pulses: BTreeMap::new(),
        }
    }
}

fn parse_role(name: &str) -> Result<Role> {
    Role::ALL
        .into_iter()
        .find(|r| r.to_string() == name)
        .ok_or_else(|| Error::Config(format!("qec.recovery_pulses: unknown role '{name}' (expected U0..U3)")))
}

impl QecSection {
    pub fn layers(&self) -> Result<Layers> {
        match self.layers {
            1 => Ok(Layers::One),
            2 => Ok(Layers::Two),
            n => Err(Error::Config(format!("qec.layers must be 1 or 2, got {n}"))),
        }
    }

    /// Cycle configuration for the preset, with recovery pulse files resolved
    /// against `base_dir`.
    pub fn cycle_config(&self, params: &SystemParams, base_dir: &Path) -> Result<QecCycleConfig> {
        let layers = self.layers()?;
        let preset = match self.mode {
            QecMode::Ideal => QecCycleConfig::ideal,
            QecMode::BudgetMatched => QecCycleConfig::budget_matched,
            QecMode::Intrinsic => QecCycleConfig::intrinsic,
            QecMode::Full => QecCycleConfig::full,
        };
        let mut cfg = preset(params.clone(), layers)?;
        cfg.n_fock = self.n_fock;
        cfg.t_wait = self.t_wait_us * US;
        cfg.action_timing = self.action_timing;
        for (name, path) in &self.recovery_pulses {
            let role = parse_role(name)?;
            let path = base_dir.join(path);
            let file = File::open(&path)
                .map_err(|e| Error::Config(format!("qec.recovery_pulses.{name}: cannot open {}: {e}", path.display())))?;
            let (pulse, hash) = read_pulse_csv(BufReader::new(file))?;
            let space = Space::qubit_cavity(self.n_fock)?;
            let expected = drift_hash(&dispersive_hamiltonian(params, &space)?.into_matrix());
            if hash.as_deref().is_some_and(|h| h != expected) {
                log::warn!("pulse {} was optimized for a different drift Hamiltonian", path.display());
            }
            cfg.recoveries.insert(role, Gate::Pulse(pulse));
        }
        cfg.validate(&FeedbackPolicy::default_for(layers)).map_err(|e| section_error("qec", e))?;
        Ok(cfg)
    }

    pub fn repetitive_options(&self, seed: u64) -> RepetitiveOptions {
        let engine = if self.master_equation {
            Engine::MasterEquation
        } else {
            Engine::Trajectories { n_traj: self.trajectories }
        };
        RepetitiveOptions { n_cycles: self.cycles, stride: self.stride, engine, mode: TomographyMode::IdealSubspace, seed }
    }

    fn validate(&self) -> Result<()> {
        self.layers()?;
        if self.cycles == 0 || self.stride == 0 || self.stride > self.cycles {
            return Err(Error::Config(format!(
                "qec.cycles ({}) and qec.stride ({}) must satisfy 1 ≤ stride ≤ cycles",
                self.cycles, self.stride
            )));
        }
        if !self.master_equation && self.trajectories == 0 {
            return Err(Error::Config("qec.trajectories must be positive".into()));
        }
        if self.sweep_grid_us.is_empty() || self.sweep_grid_us.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("qec.sweep_grid_us must be a non-empty list of positive times".into()));
        }
        if !(self.sweep_window_us > 0.0) {
            return Err(Error::Config("qec.sweep_window_us must be positive".into()));
        }
        for name in self.recovery_pulses.keys() {
            parse_role(name)?;
        }
        Ok(())
    }
}

/// Optimal-control problems and optimizer settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrapeSection {
    pub n_fock: usize,
    pub dt_ns: f64,
    /// Encode and decode duration.
    pub duration_ns: f64,
    /// Recovery pulse duration.
    pub recovery_duration_ns: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub target_fidelity: f64,
    /// Amplitude bounds of σx, σy, a + a†, i(a − a†).
    pub bounds_mhz: [f64; 4],
    pub amplitude_weight: f64,
    pub slope_weight: f64,
    pub boundary_zero: bool,
}

impl Default for GrapeSection {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        Self {
            n_fock: 12,
            dt_ns: 2.0,
            duration_ns: 770.0,
            recovery_duration_ns: 770.0,
            max_iter: o.max_iter,
            grad_tol: o.grad_tol,
            target_fidelity: 0.995,
            bounds_mhz: o.bounds.map(|b| to_hz(b) / 1e6),
            amplitude_weight: o.amplitude_weight,
            slope_weight: o.slope_weight,
            boundary_zero: o.boundary_zero,
        }
    }
}

impl GrapeSection {
    pub fn optimizer(&self, seed: u64) -> Result<OptimizerConfig> {
        let o = OptimizerConfig {
            max_iter: self.max_iter,
            grad_tol: self.grad_tol,
            target_fidelity: self.target_fidelity,
            bounds: self.bounds_mhz.map(mhz),
            amplitude_weight: self.amplitude_weight,
            slope_weight: self.slope_weight,
            boundary_zero: self.boundary_zero,
            seed,
        };
        o.validate().map_err(|e| section_error("grape", e))?;
        Ok(o)
    }
}

/// Operation errors of the analytic budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    /// Detection error in the code space and the error space.
    pub detection: [f64; 2],
    pub recovery: [f64; 4],
    pub reset: f64,
    /// Use the tabulated (rounded) thermal errors instead of the formula.
    pub tabulated_thermal: bool,
}

impl Default for BudgetSection {
    fn default() -> Self {
        let o = OperationErrors::default();
        Self { detection: o.detection, recovery: o.recovery, reset: o.reset, tabulated_thermal: true }
    }
}

impl BudgetSection {
    /// Budget inputs for the given protocol with this section's operation errors.
    pub fn inputs(&self, layers: Layers) -> ErrorBudgetInputs {
        let mut inputs = match layers {
            Layers::One => ErrorBudgetInputs::one_layer_default(),
            Layers::Two => ErrorBudgetInputs::two_layer_default(),
        };
        inputs.operations = OperationErrors { detection: self.detection, recovery: self.recovery, reset: self.reset };
        if !self.tabulated_thermal {
            inputs.thermal_override = None;
        }
        inputs
    }
}

/// Wigner grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerSection {
    pub n_fock: usize,
    /// The grid spans [−extent, extent] on both axes.
    pub extent: f64,
    pub points: usize,
}

impl Default for WignerSection {
    fn default() -> Self {
        Self { n_fock: 12, extent: 2.5, points: 51 }
    }
}

impl WignerSection {
    pub fn axis(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![0.0];
        }
        (0..self.points).map(|k| -self.extent + 2.0 * self.extent * k as f64 / (self.points - 1) as f64).collect()
    }
}

fn section_error(section: &str, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("[{section}] {msg}")),
        other => Error::Config(format!("[{section}] {other}")),
    }
}

impl RunConfig {
    /// Parse and validate a TOML document; relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Self::from_toml_str(&text, &base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    /// Check every section against the module invariants.
    pub fn validate(&self) -> Result<()> {
        let params = self.system.params()?;
        self.readout.model()?;
        self.comb.spec(&params)?;
        if self.comb.n_fock < self.comb.report_fock.max(2) || self.comb.delay_grid_ns.is_empty() {
            return Err(Error::Config("[comb] needs n_fock ≥ report_fock and a non-empty delay_grid_ns".into()));
        }
        if !(self.comb.dt_ns > 0.0) || !(self.comb.ramsey_pulse_ns > 0.0) {
            return Err(Error::Config("[comb] dt_ns and ramsey_pulse_ns must be positive".into()));
        }
        self.qec.validate()?;
        self.qec.cycle_config(&params, &self.base_dir)?;
        self.grape.optimizer(self.seed)?;
        if self.grape.n_fock < 6 || !(self.grape.dt_ns > 0.0) || !(self.grape.duration_ns >= self.grape.dt_ns) {
            return Err(Error::Config("[grape] needs n_fock ≥ 6 and duration_ns ≥ dt_ns > 0".into()));
        }
        for layers in [Layers::One, Layers::Two] {
            self.budget.inputs(layers).validate().map_err(|e| section_error("budget", e))?;
        }
        if self.wigner.points == 0 || !(self.wigner.extent > 0.0) || self.wigner.n_fock < 2 {
            return Err(Error::Config("[wigner] needs points ≥ 1, extent > 0 and n_fock ≥ 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_reference_values() {
        let cfg = RunConfig::from_toml_str("", Path::new(".")).unwrap();
        let p = cfg.system.params().unwrap();
        let r = SystemParams::reference();
        assert!((p.chi_qc / r.chi_qc - 1.0).abs() < 1e-12);
        assert!((p.t1_c / r.t1_c - 1.0).abs() < 1e-12);
        assert_eq!(cfg.comb.spec(&p).unwrap(), CombSpec::reference(p.chi_qc));
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let err = RunConfig::from_toml_str("[system]\nchi_mhz = 2.0\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("chi_mhz"), "{err}");
        let err = RunConfig::from_toml_str("sed = 3\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_section() {
        let err = RunConfig::from_toml_str("[qec]\nlayers = 3\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("qec.layers"), "{err}");
        let err = RunConfig::from_toml_str("[system]\nt1_c_us = -1.0\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("t1_c"), "{err}");
    }

    #[test]
    fn missing_pulse_file_is_rejected() {
        let text = "[qec.recovery_pulses]\nU0 = \"does-not-exist.csv\"\n";
        let err = RunConfig::from_toml_str(text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("U0"), "{err}");
    }

    #[test]
    fn serialization_round_trips_and_hash_is_stable() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml_str(&cfg.to_toml().unwrap(), Path::new(".")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        let other = RunConfig { seed: 1, ..cfg.clone() };
        assert_ne!(other.hash().unwrap(), cfg.hash().unwrap());
    }
}
