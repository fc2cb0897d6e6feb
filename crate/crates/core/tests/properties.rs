// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Property tests of module invariants.

use bosonic_qec::budget::{predicted_lifetime, ErrorBudgetInputs};
use bosonic_qec::code::{cardinal_from_basis, lowest_order_binomial, no_jump_deformation};
use bosonic_qec::qec::{bloch_of, fit_decay, ProcessMatrix, DECAY_OFFSET};
use bosonic_qec::quantum::{
    expm, hermitian_eigenvalues, wigner, CMatrix, CVector, DensityMatrix, Space, StateVector, C64,
};
use proptest::prelude::*;
use std::f64::consts::FRAC_2_PI;

fn budgets() -> [ErrorBudgetInputs; 2] {
    [ErrorBudgetInputs::one_layer_default(), ErrorBudgetInputs::two_layer_default()]
}

/// Qubit channel: unitary about an axis, then amplitude damping, then depolarization.
fn channel(axis: [f64; 3], angle: f64, gamma: f64, p: f64) -> impl Fn(&CMatrix) -> CMatrix {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt().max(1e-9);
    let [x, y, z] = axis.map(|a| a / n);
    let c = |re: f64, im: f64| C64::new(re, im);
    let h = CMatrix::from_row_slice(2, 2, &[c(z, 0.0), c(x, -y), c(x, y), c(-z, 0.0)]);
    let u = expm(&(h * c(0.0, -angle / 2.0))).expect("finite");
    let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - gamma).sqrt(), 0.0)]);
    let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(gamma.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    move |rho: &CMatrix| {
        let r = &u * rho * u.adjoint();
        let r = &k0 * &r * k0.adjoint() + &k1 * &r * k1.adjoint();
        r * c(1.0 - p, 0.0) + CMatrix::identity(2, 2) * c(p / 2.0, 0.0)
    }
}

fn qubit_cardinals() -> [CMatrix; 6] {
    let b0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let b1 = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    cardinal_from_basis(&b0, &b1).map(|v| &v * v.adjoint())
}

proptest! {
    #[test]
    fn lifetime_monotone(t in 1e-6..1e-3f64, eps in 0.001..0.9f64, dt in 1e-7..1e-4f64, de in 1e-4..0.09f64) {
        let tau = predicted_lifetime(t, eps).unwrap();
        prop_assert!(tau > 0.0);
        prop_assert!(predicted_lifetime(t + dt, eps).unwrap() > tau);
        prop_assert!(predicted_lifetime(t, eps + de).unwrap() < tau);
    }

    #[test]
    fn budget_total_affine_in_branch_errors(branch in 0usize..4, delta in -0.01..0.05f64) {
        for base in budgets() {
            if branch >= base.intrinsic.len() {
                continue;
            }
            let t0 = base.evaluate().unwrap().total;
            let mut shifted = base.clone();
            shifted.intrinsic[branch] += delta;
            let t1 = shifted.evaluate().unwrap().total;
            prop_assert!((t1 - t0 - base.probabilities[branch] * delta).abs() < 1e-14);
        }
    }

    #[test]
    fn budget_total_affine_in_operation_errors(which in 0usize..7, a in 0.0..0.05f64, b in 0.0..0.05f64) {
        for base in budgets() {
            let total = |v: f64| {
                let mut x = base.clone();
                let o = &mut x.operations;
                match which {
                    0 | 1 => o.detection[which] = v,
                    2..=5 => o.recovery[which - 2] = v,
                    _ => o.reset = v,
                }
                x.evaluate().unwrap().total
            };
            // Equal second differences and a non-negative slope.
            let (f0, fa, fab) = (total(0.0), total(a), total(a + b));
            prop_assert!(((fab - fa) * a - (fa - f0) * b).abs() < 1e-13);
            prop_assert!(fa >= f0 - 1e-15);
        }
    }

    #[test]
    fn budget_thermal_enters_with_unit_weight(th in 0.0..0.05f64) {
        for mut base in budgets() {
            base.thermal_override = Some(0.0);
            let t0 = base.evaluate().unwrap().total;
            base.thermal_override = Some(th);
            prop_assert!((base.evaluate().unwrap().total - t0 - th).abs() < 1e-14);
        }
    }

    #[test]
    fn tomography_is_physical_and_exact(
        axis in prop::array::uniform3(-1.0..1.0f64),
        angle in 0.0..6.3f64,
        gamma in 0.0..0.9f64,
        p in 0.0..0.9f64,
    ) {
        let ch = channel(axis, angle, gamma, p);
        let inputs = qubit_cardinals();
        let outputs = inputs.clone().map(|r| bloch_of(&ch(&r)));
        let chi = ProcessMatrix::from_cardinal(&outputs).unwrap();
        let m = chi.chi();
        prop_assert!((&m - m.adjoint()).norm() < 1e-10);
        prop_assert!((chi.trace() - 1.0).abs() < 1e-6);
        prop_assert!(hermitian_eigenvalues(&m).iter().all(|l| *l > -1e-6));
        for r in &inputs {
            prop_assert!((chi.apply(r) - ch(r)).norm() < 1e-9);
        }
    }

    #[test]
    fn decay_fit_round_trip(a in 0.3..0.75f64, tau_us in 100.0..2000.0f64, n in 5usize..20) {
        let tau = tau_us * 1e-6;
        let step = 2.0 * tau / n as f64;
        let pts: Vec<(f64, f64)> = (0..n).map(|k| {
            let t = k as f64 * step;
            (t, DECAY_OFFSET + a * (-t / tau).exp())
        }).collect();
        let fit = fit_decay(&pts).unwrap();
        prop_assert!((fit.lifetime / tau - 1.0).abs() < 1e-6);
        prop_assert!((fit.amplitude / a - 1.0).abs() < 1e-6);
    }

    #[test]
    fn no_jump_codewords_stay_orthonormal(kt in 0.0..2.5f64) {
        let code = lowest_order_binomial(12).unwrap();
        let d = no_jump_deformation(&code, kt, 1.0).unwrap();
        d.validate_orthonormal(1e-12).unwrap();
    }

    #[test]
    fn wigner_is_bounded(amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 8), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let v = CVector::from_iterator(8, amps.iter().map(|&(re, im)| C64::new(re, im)));
        prop_assume!(v.norm() > 1e-3);
        let psi = StateVector::new(Space::single(8).unwrap(), v.normalize()).unwrap();
        let rho: DensityMatrix = psi.to_density();
        let w = wigner(&rho, &[C64::new(x, y)]).unwrap().values[0];
        prop_assert!(w.is_finite() && w.abs() <= FRAC_2_PI + 1e-9);
    }
}
