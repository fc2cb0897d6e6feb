// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Analytic per-cycle error budget.
//!
//! Each detection branch accumulates an intrinsic error (from simulation), the
//! parity-detection errors, the recovery-pulse errors, the reset error after
//! an excited-state outcome, and the ancilla thermal error. Branch totals are
//! weighted by branch probabilities, and the cycle error ε maps to a lifetime
//! τ = −T_w / ln(1 − ε).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of QEC layers in a cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layers {
    One,
    Two,
}

impl Layers {
    pub fn count(self) -> usize {
        match self {
            Layers::One => 1,
            Layers::Two => 2,
        }
    }

    /// Number of outcome branches (2^layers).
    pub fn branches(self) -> usize {
        1 << self.count()
    }

    /// Label of a branch index: outcomes in layer order, 0 = g, 1 = e.
    pub fn branch_label(self, branch: usize) -> String {
        (0..self.count()).rev().map(|k| if branch >> k & 1 == 1 { '1' } else { '0' }).collect()
    }
}

/// Errors of individual operations (probabilities).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationErrors {
    /// Detection error in the code space (no error) and the error space (one loss).
    pub detection: [f64; 2],
    /// Errors of the recovery pulses U0..U3.
    pub recovery: [f64; 4],
    /// Error of the ancilla reset π pulse, including latency decay.
    pub reset: f64,
}

impl Default for OperationErrors {
    fn default() -> Self {
        Self { detection: [0.011, 0.025], recovery: [0.027; 4], reset: 0.012 }
    }
}

/// Inputs of the ancilla thermal-excitation error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalInputs {
    pub nth_q: f64,
    pub t1_q: f64,
    /// Total cycle duration T_w.
    pub cycle: f64,
}

/// ε_th = n_th (1 − e^{−T_w/T1}).
pub fn thermal_error(nth: f64, t_w: f64, t1_q: f64) -> Result<f64> {
    if !(t_w > 0.0) || !(t1_q > 0.0) {
        return Err(Error::InvalidArgument(format!("thermal error needs positive times, got T_w = {t_w}, T1 = {t1_q}")));
    }
    if !(0.0..=1.0).contains(&nth) {
        return Err(Error::InvalidArgument(format!("thermal population {nth} outside [0, 1]")));
    }
    Ok(nth * (1.0 - (-t_w / t1_q).exp()))
}

/// Budget inputs for one protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBudgetInputs {
    pub layers: Layers,
    /// Intrinsic error per branch, indexed by `Layers::branch_label` order.
    pub intrinsic: Vec<f64>,
    /// Branch probabilities, same indexing.
    pub probabilities: Vec<f64>,
    pub operations: OperationErrors,
    pub thermal: ThermalInputs,
    /// Thermal error used instead of the formula (e.g. a rounded tabulated value).
    #[serde(default)]
    pub thermal_override: Option<f64>,
}

/// Error columns of one branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub label: String,
    pub probability: f64,
    pub intrinsic: f64,
    pub detection: f64,
    /// Recovery-pulse errors plus reset errors of this branch.
    pub recovery: f64,
    pub thermal: f64,
    pub total: f64,
}

/// Evaluated budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetResult {
    pub rows: Vec<BranchRow>,
    /// Weighted total error per cycle.
    pub total: f64,
    pub cycle: f64,
    /// −T_w / ln(1 − ε).
    pub lifetime: f64,
}

impl ErrorBudgetInputs {
    /// Default one-layer inputs: branch probabilities and intrinsic errors of the
    /// reference device, tabulated thermal error 0.8%, cycle 92.46 µs.
    pub fn one_layer_default() -> Self {
        Self {
            layers: Layers::One,
            intrinsic: vec![0.067, 0.053],
            probabilities: vec![0.781, 0.219],
            operations: OperationErrors::default(),
            thermal: ThermalInputs { nth_q: 0.013, t1_q: 98e-6, cycle: 92.46e-6 },
            thermal_override: Some(0.008),
        }
    }

    /// Default two-layer inputs: cycle 184.92 µs, tabulated thermal error 1.1%.
    pub fn two_layer_default() -> Self {
        Self {
            layers: Layers::Two,
            intrinsic: vec![0.121, 0.148, 0.092, 0.204],
            probabilities: vec![0.630, 0.152, 0.174, 0.044],
            operations: OperationErrors::default(),
            thermal: ThermalInputs { nth_q: 0.013, t1_q: 98e-6, cycle: 184.92e-6 },
            thermal_override: Some(0.011),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.layers.branches();
        if self.intrinsic.len() != n || self.probabilities.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} layer(s) need {n} intrinsic errors and probabilities, got {} and {}",
                self.layers.count(),
                self.intrinsic.len(),
                self.probabilities.len()
            )));
        }
        let sum: f64 = self.probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("branch probabilities sum to {sum}, not 1")));
        }
        let o = &self.operations;
        let all = self
            .intrinsic
            .iter()
            .chain(&self.probabilities)
            .chain(&o.detection)
            .chain(&o.recovery)
            .chain(std::iter::once(&o.reset))
            .chain(self.thermal_override.iter());
        for &e in all {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidArgument(format!("error or probability {e} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Thermal error from the override or the formula.
    pub fn thermal_error(&self) -> Result<f64> {
        match self.thermal_override {
            Some(e) => Ok(e),
            None => thermal_error(self.thermal.nth_q, self.thermal.cycle, self.thermal.t1_q),
        }
    }

    /// Detection and recovery columns of each branch.
    fn columns(&self, branch: usize) -> (f64, f64) {
        let o = &self.operations;
        let [d0, d1] = o.detection;
        let [u0, u1, u2, u3] = o.recovery;
        let pi = o.reset;
        match (self.layers, branch) {
            (Layers::One, 0) => (d0, u0),
            (Layers::One, _) => (d1, u1 + pi),
            (Layers::Two, 0) => (d0 + d0, u2),
            (Layers::Two, 1) => (d0 + d1, pi + u3),
            (Layers::Two, 2) => (d1 + d0, pi + u1 + u2),
            (Layers::Two, _) => (d1 + d1, pi + u1 + pi + u3),
        }
    }

    /// Per-branch rows with detection, recovery and thermal columns.
    pub fn rows(&self) -> Result<Vec<BranchRow>> {
        self.validate()?;
        let th = self.thermal_error()?;
        Ok((0..self.layers.branches())
            .map(|b| {
                let (detection, recovery) = self.columns(b);
                let intrinsic = self.intrinsic[b];
                BranchRow {
                    label: self.layers.branch_label(b),
                    probability: self.probabilities[b],
                    intrinsic,
                    detection,
                    recovery,
                    thermal: th,
                    total: intrinsic + detection + recovery + th,
                }
            })
            .collect())
    }

    /// Weighted total and predicted lifetime.
    pub fn evaluate(&self) -> Result<BudgetResult> {
        let rows = self.rows()?;
        let total = rows.iter().map(|r| r.probability * r.total).sum();
        let lifetime = predicted_lifetime(self.thermal.cycle, total)?;
        Ok(BudgetResult { rows, total, cycle: self.thermal.cycle, lifetime })
    }
}

/// ε₁ = p₀(ε_i0 + ε_D0 + ε_U0 + ε_th) + p₁(ε_i1 + ε_D1 + ε_U1 + ε_π + ε_th).
pub fn weighted_total_one_layer(inputs: &ErrorBudgetInputs) -> Result<f64> {
    if inputs.layers != Layers::One {
        return Err(Error::InvalidArgument("one-layer total needs one-layer inputs".into()));
    }
    Ok(inputs.evaluate()?.total)
}

/// Four-branch weighted total of the two-layer protocol.
pub fn weighted_total_two_layer(inputs: &ErrorBudgetInputs) -> Result<f64> {
    if inputs.layers != Layers::Two {
        return Err(Error::InvalidArgument("two-layer total needs two-layer inputs".into()));
    }
    Ok(inputs.evaluate()?.total)
}

/// τ = −T_w / ln(1 − ε).
pub fn predicted_lifetime(t_w: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("cycle error {eps} must lie in (0, 1)")));
    }
    if !(t_w > 0.0) {
        return Err(Error::InvalidArgument(format!("cycle duration {t_w} must be positive")));
    }
    Ok(-t_w / (-eps).ln_1p())
}

/// Outcome of one simulated cycle, tagged by branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub branch: usize,
    /// Infidelity of this sample with respect to the ideal logical output.
    pub error: f64,
}

/// Estimate branch probabilities and intrinsic errors from tagged samples.
pub fn budget_from_simulation(
    samples: &[BranchSample],
    layers: Layers,
    operations: OperationErrors,
    thermal: ThermalInputs,
    min_per_branch: usize,
) -> Result<ErrorBudgetInputs> {
    let n = layers.branches();
    let mut count = vec![0usize; n];
    let mut err = vec![0.0; n];
    for s in samples {
        if s.branch >= n {
            return Err(Error::InvalidArgument(format!("branch {} out of range for {n} branches", s.branch)));
        }
        count[s.branch] += 1;
        err[s.branch] += s.error;
    }
    if let Some(b) = (0..n).find(|&b| count[b] < min_per_branch.max(1)) {
        return Err(Error::InsufficientSamples(format!(
            "branch {} has {} samples, need {}",
            layers.branch_label(b),
            count[b],
            min_per_branch.max(1)
        )));
    }
    let total = samples.len() as f64;
    Ok(ErrorBudgetInputs {
        layers,
        intrinsic: (0..n).map(|b| err[b] / count[b] as f64).collect(),
        probabilities: count.iter().map(|&c| c as f64 / total).collect(),
        operations,
        thermal,
        thermal_override: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_values() {
        assert!((thermal_error(0.013, 92.46e-6, 98e-6).unwrap() - 0.0079).abs() < 5e-5);
        assert!((thermal_error(0.013, 184.92e-6, 98e-6).unwrap() - 0.011).abs() < 5e-5);
        assert_eq!(thermal_error(0.0, 1e-6, 1e-6).unwrap(), 0.0);
        assert!(thermal_error(0.01, 0.0, 1e-6).is_err());
    }

    #[test]
    fn table_columns() {
        let rows = ErrorBudgetInputs::two_layer_default().rows().unwrap();
        let det: Vec<f64> = rows.iter().map(|r| r.detection).collect();
        let rec: Vec<f64> = rows.iter().map(|r| r.recovery).collect();
        for (a, b) in det.iter().zip([0.022, 0.036, 0.036, 0.050]) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in rec.iter().zip([0.027, 0.039, 0.066, 0.078]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(rows[2].label, "10");
        let one = ErrorBudgetInputs::one_layer_default().rows().unwrap();
        assert!((one[1].recovery - 0.039).abs() < 1e-12);
    }

    #[test]
    fn weighted_totals() {
        let e1 = weighted_total_one_layer(&ErrorBudgetInputs::one_layer_default()).unwrap();
        assert!((e1 - 0.115).abs() < 1e-3, "{e1}");
        let e2 = weighted_total_two_layer(&ErrorBudgetInputs::two_layer_default()).unwrap();
        assert!((e2 - 0.201).abs() < 1e-3, "{e2}");
        assert!(weighted_total_two_layer(&ErrorBudgetInputs::one_layer_default()).is_err());
    }

    #[test]
    fn degenerate_inputs() {
        let mut z = ErrorBudgetInputs::one_layer_default();
        z.intrinsic = vec![0.0; 2];
        z.operations = OperationErrors { detection: [0.0; 2], recovery: [0.0; 4], reset: 0.0 };
        z.thermal_override = Some(0.0);
        assert_eq!(z.rows().unwrap().iter().map(|r| r.total).sum::<f64>(), 0.0);
        let mut p = ErrorBudgetInputs::one_layer_default();
        p.probabilities = vec![1.0, 0.0];
        let rows = p.rows().unwrap();
        assert!((p.evaluate().unwrap().total - rows[0].total).abs() < 1e-15);
        let mut bad = ErrorBudgetInputs::one_layer_default();
        bad.probabilities = vec![0.5, 0.4];
        assert!(bad.validate().is_err());
        bad.probabilities = vec![0.5, 0.5];
        bad.intrinsic = vec![0.1];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn lifetimes() {
        assert!((predicted_lifetime(92.46e-6, 0.115).unwrap() - 757e-6).abs() < 1e-6);
        assert!((predicted_lifetime(184.92e-6, 0.201).unwrap() - 824e-6).abs() < 1e-6);
        let eps = 1e-6;
        let t = predicted_lifetime(1.0, eps).unwrap();
        assert!((t - 1.0 / eps).abs() / (1.0 / eps) < 1e-5);
        assert!(predicted_lifetime(1.0, 0.0).is_err());
        assert!(predicted_lifetime(1.0, 1.0).is_err());
    }

    #[test]
    fn simulation_estimates() {
        let samples: Vec<BranchSample> =
            (0..100).map(|k| BranchSample { branch: usize::from(k % 4 == 0), error: if k % 4 == 0 { 0.2 } else { 0.1 } }).collect();
        let th = ThermalInputs { nth_q: 0.013, t1_q: 98e-6, cycle: 92.46e-6 };
        let b = budget_from_simulation(&samples, Layers::One, OperationErrors::default(), th.clone(), 5).unwrap();
        assert!((b.probabilities[1] - 0.25).abs() < 1e-12);
        assert!((b.intrinsic[0] - 0.1).abs() < 1e-12 && (b.intrinsic[1] - 0.2).abs() < 1e-12);
        assert!(matches!(
            budget_from_simulation(&samples, Layers::Two, OperationErrors::default(), th, 1),
            Err(Error::InsufficientSamples(_))
        ));
    }
}
