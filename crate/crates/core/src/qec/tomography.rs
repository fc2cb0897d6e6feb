// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-qubit process tomography from the six cardinal inputs.
//!
//! Inputs are ordered +Z, −Z, +X, −X, +Y, −Y. Output Bloch vectors are taken
//! on the logical subspace only, so population that leaked out of it shortens
//! them; the reconstructed process is then trace preserving by construction
//! (leaked weight counts as maximally mixed).

use nalgebra::{Matrix4, SMatrix};
use serde::{Deserialize, Serialize};

use crate::quantum::{hermitian_eigenvalues, hermitian_part, nearest_density, CMatrix, CVector, C64, I, ONE, ZERO};
use crate::{Error, Result};

/// Negative χ eigenvalues below this trigger projection onto a physical matrix.
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

/// Logical Bloch vector (⟨X⟩, ⟨Y⟩, ⟨Z⟩).
pub type Bloch = [f64; 3];

/// The four Pauli matrices I, X, Y, Z.
pub fn paulis() -> [CMatrix; 4] {
    [
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// Bloch vector of a 2×2 (possibly subnormalized) density matrix.
pub fn bloch_of(rho: &CMatrix) -> Bloch {
    let r01 = rho[(0, 1)];
    [2.0 * r01.re, -2.0 * r01.im, rho[(0, 0)].re - rho[(1, 1)].re]
}

/// Bloch vector of the component of `psi` on the orthonormal pair (b0, b1).
pub fn bloch_on(psi: &CVector, b0: &CVector, b1: &CVector) -> Bloch {
    let c0 = b0.dotc(psi);
    let c1 = b1.dotc(psi);
    let r01 = c0 * c1.conj();
    [2.0 * r01.re, -2.0 * r01.im, c0.norm_sqr() - c1.norm_sqr()]
}

/// Bloch vector of ρ restricted to the orthonormal pair (b0, b1).
pub fn bloch_on_density(rho: &CMatrix, b0: &CVector, b1: &CVector) -> Bloch {
    let basis = [b0, b1];
    let m = CMatrix::from_fn(2, 2, |j, k| basis[j].dotc(&(rho * basis[k])));
    bloch_of(&m)
}

/// Pauli transfer matrix R_ij = ½ tr(σ_i E(σ_j)) of a trace-preserving
/// channel, from the outputs of the six cardinal inputs.
pub fn ptm_from_cardinal(outputs: &[Bloch; 6]) -> Matrix4<f64> {
    let mut r = Matrix4::zeros();
    r[(0, 0)] = 1.0;
    for i in 0..3 {
        r[(i + 1, 0)] = outputs.iter().map(|b| b[i]).sum::<f64>() / 6.0;
    }
    // Input axis j ∈ {X, Y, Z} sits at indices (plus, minus).
    let axes = [(2usize, 3usize), (4, 5), (0, 1)];
    for (j, (p, m)) in axes.iter().enumerate() {
        for i in 0..3 {
            r[(i + 1, j + 1)] = 0.5 * (outputs[*p][i] - outputs[*m][i]);
        }
    }
    r
}

/// Linear map from χ (row-major over m, n) to the PTM (row-major over i, j):
/// R_ij = ½ Σ_mn χ_mn tr(σ_i σ_m σ_j σ_n).
fn chi_to_ptm_map() -> SMatrix<C64, 16, 16> {
    let p = paulis();
    SMatrix::<C64, 16, 16>::from_fn(|row, col| {
        let (i, j) = (row / 4, row % 4);
        let (m, n) = (col / 4, col % 4);
        (&p[i] * &p[m] * &p[j] * &p[n]).trace() * 0.5
    })
}

/// A single-qubit process matrix χ in the Pauli basis {I, X, Y, Z}:
/// E(ρ) = Σ_mn χ_mn σ_m ρ σ_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessMatrix {
    chi: [[C64; 4]; 4],
    /// Whether reconstruction had to project onto the physical set.
    pub projected: bool,
}

impl ProcessMatrix {
    /// χ of the identity channel.
    pub fn identity() -> Self {
        let mut chi = [[ZERO; 4]; 4];
        chi[0][0] = ONE;
        Self { chi, projected: false }
    }

    /// χ of the unitary channel ρ ↦ UρU† for a 2×2 unitary U.
    pub fn unitary(u: &CMatrix) -> Result<Self> {
        if u.shape() != (2, 2) {
            return Err(Error::DimensionMismatch(format!("expected a 2×2 unitary, got {:?}", u.shape())));
        }
        let p = paulis();
        let c: Vec<C64> = p.iter().map(|s| (s * u).trace() * 0.5).collect();
        let chi = std::array::from_fn(|m| std::array::from_fn(|n| c[m] * c[n].conj()));
        Ok(Self { chi, projected: false })
    }

    /// Least-squares reconstruction from the six cardinal output Bloch vectors.
    pub fn from_cardinal(outputs: &[Bloch; 6]) -> Result<Self> {
        Self::from_ptm(&ptm_from_cardinal(outputs))
    }

    /// χ from a Pauli transfer matrix, projected onto the physical set with a
    /// warning if it has eigenvalues below −[`POSITIVITY_TOLERANCE`].
    pub fn from_ptm(r: &Matrix4<f64>) -> Result<Self> {
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite Pauli transfer matrix".into()));
        }
        let a = chi_to_ptm_map();
        let rhs = nalgebra::SVector::<C64, 16>::from_fn(|k, _| C64::new(r[(k / 4, k % 4)], 0.0));
        let x = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("singular χ reconstruction map".into()))?;
        let m = hermitian_part(&CMatrix::from_fn(4, 4, |i, j| x[4 * i + j]));
        let min = hermitian_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
        let (m, projected) = if min < -POSITIVITY_TOLERANCE {
            log::warn!("process matrix has eigenvalue {min:.3e}; projecting onto the physical set");
            (nearest_density(&m), true)
        } else {
            (m, false)
        };
        let chi = std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]));
        Ok(Self { chi, projected })
    }

    pub fn chi(&self) -> CMatrix {
        CMatrix::from_fn(4, 4, |i, j| self.chi[i][j])
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.chi[i][i].re).sum()
    }

    /// F_χ = tr(χ χ_ideal).
    pub fn fidelity(&self, ideal: &ProcessMatrix) -> f64 {
        let mut f = ZERO;
        for i in 0..4 {
            for j in 0..4 {
                f += self.chi[i][j] * ideal.chi[j][i];
            }
        }
        f.re
    }

    /// F_χ against the identity channel, χ_II.
    pub fn identity_fidelity(&self) -> f64 {
        self.chi[0][0].re
    }

    /// Apply the channel to a 2×2 density matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let p = paulis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                out += (&p[m] * rho * &p[n]) * self.chi[m][n];
            }
        }
        out
    }
}

/// Rescale F_χ so that 0.25 (fully depolarized) maps to 0 and 1 to 1.
pub fn normalized_fidelity(f_chi: f64) -> f64 {
    (f_chi - 0.25) / 0.75
}

/// Process tomography of a channel given as a map from cardinal-input index
/// (0..6, ordered ±Z, ±X, ±Y) to output logical Bloch vector.
pub fn process_tomography(channel: impl Fn(usize) -> Result<Bloch>) -> Result<ProcessMatrix> {
    let mut outs = [[0.0; 3]; 6];
    for (k, o) in outs.iter_mut().enumerate() {
        *o = channel(k)?;
    }
    ProcessMatrix::from_cardinal(&outs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CARDINAL: [Bloch; 6] =
        [[0., 0., 1.], [0., 0., -1.], [1., 0., 0.], [-1., 0., 0.], [0., 1., 0.], [0., -1., 0.]];

    fn rho_of(b: &Bloch) -> CMatrix {
        let p = paulis();
        (&p[0] + &p[1] * C64::new(b[0], 0.0) + &p[2] * C64::new(b[1], 0.0) + &p[3] * C64::new(b[2], 0.0)) * C64::new(0.5, 0.0)
    }

    #[test]
    fn identity_and_depolarizing() {
        let id = process_tomography(|k| Ok(CARDINAL[k])).unwrap();
        assert!((id.chi() - ProcessMatrix::identity().chi()).norm() < 1e-12);
        assert!((id.identity_fidelity() - 1.0).abs() < 1e-12);
        let dep = process_tomography(|_| Ok([0.0; 3])).unwrap();
        assert!((dep.identity_fidelity() - 0.25).abs() < 1e-12);
        assert!((dep.trace() - 1.0).abs() < 1e-12);
        assert!(!dep.projected);
    }

    #[test]
    fn logical_x() {
        let x = process_tomography(|k| {
            let b = CARDINAL[k];
            Ok([b[0], -b[1], -b[2]])
        })
        .unwrap();
        assert!((x.chi()[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!(x.identity_fidelity().abs() < 1e-12);
        let ux = ProcessMatrix::unitary(&paulis()[1]).unwrap();
        assert!((x.fidelity(&ux) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_reproduces_the_channel() {
        // Amplitude damping composed with a small rotation.
        let g: f64 = 0.3;
        let th: f64 = 0.2;
        let k0 = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::new((1.0 - g).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[ZERO, C64::new(g.sqrt(), 0.0), ZERO, ZERO]);
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(th.cos(), 0.0), C64::new(-th.sin(), 0.0), C64::new(th.sin(), 0.0), C64::new(th.cos(), 0.0)],
        );
        let channel = |rho: &CMatrix| -> CMatrix {
            let r = &k0 * rho * k0.adjoint() + &k1 * rho * k1.adjoint();
            &u * r * u.adjoint()
        };
        let pm = process_tomography(|k| Ok(bloch_of(&channel(&rho_of(&CARDINAL[k]))))).unwrap();
        assert!((pm.trace() - 1.0).abs() < 1e-12);
        assert!(hermitian_eigenvalues(&pm.chi()).iter().all(|&e| e > -1e-12));
        let probe = rho_of(&[0.3, -0.4, 0.5]);
        assert!((pm.apply(&probe) - channel(&probe)).norm() < 1e-12);
    }

    #[test]
    fn leakage_shortens_bloch_vectors() {
        let f = |s: f64| process_tomography(|k| Ok(CARDINAL[k].map(|x| x * s))).unwrap().identity_fidelity();
        assert!((f(1.0) - 1.0).abs() < 1e-12);
        assert!(f(0.9) < f(1.0));
        assert!((f(0.9) - (1.0 + 3.0 * 0.9) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn unphysical_data_is_projected() {
        let pm = process_tomography(|k| Ok(CARDINAL[k].map(|x| 1.3 * x))).unwrap();
        assert!(pm.projected);
        assert!(hermitian_eigenvalues(&pm.chi()).iter().all(|&e| e > -1e-9));
        assert!((pm.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bloch_helpers_agree() {
        let b0 = CVector::from_vec(vec![ONE, ZERO, ZERO]);
        let b1 = CVector::from_vec(vec![ZERO, ZERO, ONE]);
        let psi = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.8)]);
        let rho = &psi * psi.adjoint();
        let a = bloch_on(&psi, &b0, &b1);
        let b = bloch_on_density(&rho, &b0, &b1);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
        assert!((a[1] - 2.0 * 0.6 * 0.8).abs() < 1e-14);
    }
}
