// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::quantum::{expm, BlockOp, CMatrix, DensityMatrix, Operator, C64, I};
use crate::{Error, Result};

use super::check_step;

/// dρ/dt = −i[H, ρ] + Σ (LρL† − ½{L†L, ρ}).
pub fn lindblad_rhs(h: &CMatrix, collapse: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let heff = effective_hamiltonian(h, collapse);
    rhs_with_heff(&heff, collapse, rho)
}

/// H − (i/2) Σ L†L.
pub(crate) fn effective_hamiltonian(h: &CMatrix, collapse: &[CMatrix]) -> CMatrix {
    let mut heff = h.clone();
    for l in collapse {
        heff -= (l.adjoint() * l) * C64::new(0.0, 0.5);
    }
    heff
}

fn rhs_with_heff(heff: &CMatrix, collapse: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let a = heff * rho;
    let mut out = (&a - a.adjoint()) * (-I);
    // −i(Heff ρ − ρ Heff†) = −i(Heff ρ − (Heff ρ)†) since ρ is Hermitian.
    for l in collapse {
        out += l * rho * l.adjoint();
    }
    out
}

/// Fixed-step RK4 integration of the Lindblad master equation.
///
/// `h_t` adds a time-dependent Hamiltonian to `h_static`. The number of steps
/// is ceil(duration/dt) with the step shrunk to divide the duration evenly.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    h_static: &Operator,
    h_t: Option<&dyn Fn(f64) -> CMatrix>,
    collapse: &[Operator],
    duration: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    crate::quantum::same_space(rho0.space(), h_static.space())?;
    for l in collapse {
        crate::quantum::same_space(rho0.space(), l.space())?;
    }
    let h0 = h_static.matrix();
    let probe = match h_t {
        Some(f) => h0 + f(0.0),
        None => h0.clone(),
    };
    check_step(&probe, dt, duration)?;
    if duration == 0.0 {
        return Ok(rho0.clone());
    }
    let steps = (duration / dt).ceil() as usize;
    let h_step = duration / steps as f64;
    let ls: Vec<CMatrix> = collapse.iter().map(|l| l.matrix().clone()).collect();
    let dissipation = effective_hamiltonian(&CMatrix::zeros(h0.nrows(), h0.ncols()), &ls);
    let heff_at = |t: f64| -> CMatrix {
        let mut h = h0 + &dissipation;
        if let Some(f) = h_t {
            h += f(t);
        }
        h
    };
    let mut rho = rho0.matrix().clone();
    let static_heff = h_t.is_none().then(|| heff_at(0.0));
    for k in 0..steps {
        let t = k as f64 * h_step;
        let (ha, hb, hc) = match &static_heff {
            Some(h) => (h.clone(), h.clone(), h.clone()),
            None => (heff_at(t), heff_at(t + 0.5 * h_step), heff_at(t + h_step)),
        };
        let k1 = rhs_with_heff(&ha, &ls, &rho);
        let k2 = rhs_with_heff(&hb, &ls, &(&rho + &k1 * C64::new(0.5 * h_step, 0.0)));
        let k3 = rhs_with_heff(&hb, &ls, &(&rho + &k2 * C64::new(0.5 * h_step, 0.0)));
        let k4 = rhs_with_heff(&hc, &ls, &(&rho + &k3 * C64::new(h_step, 0.0)));
        rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h_step / 6.0, 0.0);
    }
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let drift = (rho.trace() - rho0.trace()).norm();
    if drift > 1e-6 {
        return Err(Error::Numeric(format!("trace drifted by {drift:.3e} during Lindblad evolution")));
    }
    DensityMatrix::new(rho0.space().clone(), rho)
}

/// Vectorized Lindbladian acting on column-stacked vec(ρ):
/// vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
pub fn liouvillian(h: &CMatrix, collapse: &[CMatrix]) -> CMatrix {
    let d = h.nrows();
    let eye = CMatrix::identity(d, d);
    let heff = effective_hamiltonian(h, collapse);
    // −i Heff ρ + i ρ Heff†
    let mut l = eye.kronecker(&heff) * (-I) + heff.adjoint().transpose().kronecker(&eye) * I;
    for c in collapse {
        l += c.conjugate().kronecker(c);
    }
    l
}

/// Exact propagator exp(L·t) of a time-independent Lindbladian, stored in
/// block form on vec(ρ).
#[derive(Clone, Debug)]
pub struct LindbladPropagator {
    dim: usize,
    superop: BlockOp,
}

impl LindbladPropagator {
    pub fn new(h: &CMatrix, collapse: &[CMatrix], t: f64) -> Result<Self> {
        let l = liouvillian(h, collapse);
        let blocks = BlockOp::from_dense(&l);
        let superop = blocks.try_map(|b| expm(&b.map(|x| x * t)))?;
        Ok(Self { dim: h.nrows(), superop })
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = self.superop.apply(&nalgebra::DVector::from_column_slice(rho.as_slice()));
        CMatrix::from_column_slice(self.dim, self.dim, v.as_slice())
    }

    pub fn largest_block(&self) -> usize {
        self.superop.largest_block()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{annihilation, pure_mixed_fidelity, sigma_minus, proj_e, Space, StateVector, ZERO, ONE};

    fn qubit_rho(p_e: f64, coh: C64) -> DensityMatrix {
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(1.0 - p_e, 0.0), coh, coh.conj(), C64::new(p_e, 0.0)]);
        DensityMatrix::new(Space::single(2).unwrap(), m).unwrap()
    }

    #[test]
    fn amplitude_damping_matches_closed_form() {
        let t1: f64 = 98e-6;
        let l = sigma_minus().scaled(C64::new((1.0 / t1).sqrt(), 0.0));
        let h = Operator::zeros(Space::single(2).unwrap());
        let out = evolve_lindblad(&qubit_rho(1.0, ZERO), &h, None, &[l], t1, 1e-7).unwrap();
        let pe = out.matrix()[(1, 1)].re;
        assert!((pe / (-1.0f64).exp() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn pure_dephasing_matches_closed_form() {
        let tphi: f64 = 968e-6;
        let l = proj_e().scaled(C64::new((2.0 / tphi).sqrt(), 0.0));
        let h = Operator::zeros(Space::single(2).unwrap());
        let t = 300e-6;
        let out = evolve_lindblad(&qubit_rho(0.5, C64::new(0.5, 0.0)), &h, None, &[l], t, 1e-7).unwrap();
        let coh = out.matrix()[(0, 1)].norm();
        assert!((coh / (0.5 * (-t / tphi).exp()) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn damped_coherent_state() {
        let d = 12;
        let kappa: f64 = 1.0 / 578e-6;
        let a = annihilation(d).unwrap();
        let l = a.scaled(C64::new(kappa.sqrt(), 0.0));
        let h = Operator::zeros(Space::single(d).unwrap());
        let t = 0.1 / kappa;
        let rho0 = StateVector::coherent(d, ONE).unwrap().to_density();
        let out = evolve_lindblad(&rho0, &h, None, &[l], t, t / 200.0).unwrap();
        let expect = StateVector::coherent(d, C64::new((-kappa * t / 2.0).exp(), 0.0)).unwrap();
        assert!(pure_mixed_fidelity(&expect, &out).unwrap() > 0.9999);
        assert!(out.min_eigenvalue() > -1e-7);
    }

    #[test]
    fn exact_propagator_matches_rk4() {
        let d = 5;
        let a = annihilation(d).unwrap().into_matrix();
        let h = (a.adjoint() * &a) * C64::new(3.0e5, 0.0) + (&a + a.adjoint()) * C64::new(1.0e5, 0.0);
        let ls = vec![&a * C64::new(30.0, 0.0), a.adjoint() * C64::new(5.0, 0.0)];
        let space = Space::single(d).unwrap();
        let rho0 = StateVector::coherent(d, C64::new(0.5, 0.2)).unwrap().to_density();
        let t = 20e-6;
        let exact = LindbladPropagator::new(&h, &ls, t).unwrap().apply(rho0.matrix());
        let ops: Vec<Operator> = ls.iter().map(|l| Operator::new(space.clone(), l.clone(), "L").unwrap()).collect();
        let hop = Operator::new(space, h, "H").unwrap();
        let rk = evolve_lindblad(&rho0, &hop, None, &ops, t, 1e-8).unwrap();
        assert!((rk.matrix() - exact).norm() < 1e-9);
    }
}
