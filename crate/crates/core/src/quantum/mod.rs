// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Truncated Fock-space linear algebra.
//!
//! Composite spaces are ordered qubit ⊗ cavity, with qubit index 0 = |g⟩ and
//! 1 = |e⟩. The composite basis index of |q, n⟩ is therefore `q * n_fock + n`.

pub(crate) mod block;
mod expm;
mod wigner;

pub use block::BlockOp;
pub use expm::{expm, matrix_exponential};
pub use wigner::{wigner, wigner_grid, WignerGrid, WignerOutput};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Population in the top two Fock levels above which truncation is flagged.
pub const TRUNCATION_TAIL_LIMIT: f64 = 1e-6;

/// Ordered subsystem dimensions of a composite Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    factors: Vec<usize>,
}

impl Space {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&d| d == 0) {
            return Err(Error::InvalidDimension(format!(
                "space factors must be non-empty and positive, got {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    /// The qubit ⊗ cavity space with `n_fock` cavity levels.
    pub fn qubit_cavity(n_fock: usize) -> Result<Self> {
        Self::new(vec![2, n_fock])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// Cavity truncation if this is a qubit ⊗ cavity space.
    pub fn n_fock(&self) -> Option<usize> {
        match self.factors.as_slice() {
            [2, n] => Some(*n),
            _ => None,
        }
    }

    pub fn require_qubit_cavity(&self) -> Result<usize> {
        self.n_fock().ok_or_else(|| {
            Error::InvalidDimension(format!(
                "expected a qubit ⊗ cavity space, got factors {:?}",
                self.factors
            ))
        })
    }

    fn tensor(&self, other: &Space) -> Space {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Space { factors }
    }
}

/// Qubit basis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    G,
    E,
}

impl Qubit {
    pub fn index(self) -> usize {
        match self {
            Qubit::G => 0,
            Qubit::E => 1,
        }
    }

    pub fn flipped(self) -> Qubit {
        match self {
            Qubit::G => Qubit::E,
            Qubit::E => Qubit::G,
        }
    }
}

impl std::fmt::Display for Qubit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Qubit::G => "g",
            Qubit::E => "e",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: Space,
    amps: CVector,
}

impl StateVector {
    pub fn new(space: Space, amps: CVector) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} in space of dimension {}",
                amps.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amps })
    }

    pub fn basis(space: Space, index: usize) -> Result<Self> {
        let dim = space.dim();
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = ONE;
        Ok(Self { space, amps })
    }

    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        Self::basis(Space::single(dim)?, n)
    }

    /// |q⟩ ⊗ |cavity⟩ for a cavity amplitude vector.
    pub fn qubit_cavity(q: Qubit, cavity: &CVector) -> Result<Self> {
        let n = cavity.len();
        let space = Space::qubit_cavity(n)?;
        let mut amps = CVector::zeros(2 * n);
        amps.rows_mut(q.index() * n, n).copy_from(cavity);
        Ok(Self { space, amps })
    }

    /// Coherent state |α⟩ truncated to `dim` levels and renormalized.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        let mut amps = CVector::zeros(dim);
        let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..dim {
            amps[n] = term;
            term *= alpha / ((n + 1) as f64).sqrt();
        }
        let s = Self::new(Space::single(dim)?, amps)?;
        Ok(s.normalized())
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            space: self.space.clone(),
            amps: if n > 0.0 { self.amps.unscale(n) } else { self.amps.clone() },
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        same_space(&self.space, &other.space)?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            space: self.space.tensor(&other.space),
            amps: self.amps.kronecker(&other.amps),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: Space, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "density matrix {}x{} in space of dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    pub fn maximally_mixed(space: Space) -> Self {
        let d = space.dim();
        let matrix = CMatrix::identity(d, d).unscale(d as f64);
        Self { space, matrix }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.matrix) <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix).iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// ⟨O⟩ = Tr(ρ O).
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        same_space(&self.space, &op.space)?;
        Ok((&self.matrix * &op.matrix).trace())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            space: self.space.tensor(&other.space),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// Reduced state of subsystem `keep` of a two-factor space.
    pub fn partial_trace(&self, keep: usize) -> Result<DensityMatrix> {
        let (d0, d1) = match self.space.factors() {
            [a, b] => (*a, *b),
            f => {
                return Err(Error::InvalidArgument(format!(
                    "partial trace needs a two-factor space, got {f:?}"
                )))
            }
        };
        let m = &self.matrix;
        let matrix = match keep {
            0 => CMatrix::from_fn(d0, d0, |i, j| (0..d1).map(|k| m[(i * d1 + k, j * d1 + k)]).sum()),
            1 => CMatrix::from_fn(d1, d1, |k, l| (0..d0).map(|i| m[(i * d1 + k, i * d1 + l)]).sum()),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "subsystem index {keep} out of range for two factors"
                )))
            }
        };
        let dim = if keep == 0 { d0 } else { d1 };
        Ok(DensityMatrix { space: Space::single(dim)?, matrix })
    }

    /// Population of the top two Fock levels of a single-cavity state.
    pub fn truncation_tail(&self) -> f64 {
        let d = self.matrix.nrows();
        (d.saturating_sub(2)..d).map(|i| self.matrix[(i, i)].re).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: Space,
    matrix: CMatrix,
    label: String,
}

impl Operator {
    pub fn new(space: Space, matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "operator {}x{} in space of dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix, label: label.into() })
    }

    pub fn identity(space: Space) -> Self {
        let d = space.dim();
        Self { space, matrix: CMatrix::identity(d, d), label: "I".into() }
    }

    pub fn zeros(space: Space) -> Self {
        let d = space.dim();
        Self { space, matrix: CMatrix::zeros(d, d), label: "0".into() }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            label: format!("{}†", self.label),
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.scale_c(c), label: self.label.clone() }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        same_space(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
            label: format!("{} + {}", self.label, other.label),
        })
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        same_space(&self.space, &other.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
            label: format!("{}·{}", self.label, other.label),
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        same_space(&self.space, &psi.space)?;
        Ok(StateVector { space: self.space.clone(), amps: &self.matrix * &psi.amps })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.matrix) <= tol
    }
}

trait ScaleC {
    fn scale_c(&self, c: C64) -> Self;
}

impl ScaleC for CMatrix {
    fn scale_c(&self, c: C64) -> Self {
        self.map(|x| x * c)
    }
}

/// Kronecker product with factor order `a ⊗ b`.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator {
        space: a.space.tensor(&b.space),
        matrix: a.matrix.kronecker(&b.matrix),
        label: format!("{}⊗{}", a.label, b.label),
    }
}

pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("ladder operators need dim ≥ 2, got {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(Space::single(dim)?, m, "a")
}

pub fn creation(dim: usize) -> Result<Operator> {
    Ok(annihilation(dim)?.dagger().with_label("a†"))
}

pub fn number(dim: usize) -> Result<Operator> {
    let m = CMatrix::from_diagonal(&CVector::from_fn(dim, |n, _| C64::new(n as f64, 0.0)));
    Operator::new(Space::single(dim)?, m, "n")
}

fn qubit_op(entries: [[C64; 2]; 2], label: &str) -> Operator {
    let m = CMatrix::from_fn(2, 2, |i, j| entries[i][j]);
    Operator { space: Space { factors: vec![2] }, matrix: m, label: label.into() }
}

pub fn sigma_x() -> Operator {
    qubit_op([[ZERO, ONE], [ONE, ZERO]], "σx")
}

pub fn sigma_y() -> Operator {
    qubit_op([[ZERO, -I], [I, ZERO]], "σy")
}

/// σz with σz|g⟩ = |g⟩ and σz|e⟩ = −|e⟩.
pub fn sigma_z() -> Operator {
    qubit_op([[ONE, ZERO], [ZERO, -ONE]], "σz")
}

/// σ⁻ = |g⟩⟨e|.
pub fn sigma_minus() -> Operator {
    qubit_op([[ZERO, ONE], [ZERO, ZERO]], "σ-")
}

/// σ⁺ = |e⟩⟨g|.
pub fn sigma_plus() -> Operator {
    qubit_op([[ZERO, ZERO], [ONE, ZERO]], "σ+")
}

pub fn proj_g() -> Operator {
    qubit_op([[ONE, ZERO], [ZERO, ZERO]], "|g⟩⟨g|")
}

pub fn proj_e() -> Operator {
    qubit_op([[ZERO, ZERO], [ZERO, ONE]], "|e⟩⟨e|")
}

/// |⟨a|b⟩|² for normalized pure states.
pub fn pure_fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// ⟨ψ|ρ|ψ⟩.
pub fn pure_mixed_fidelity(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    same_space(&psi.space, &rho.space)?;
    let v = psi.amps.dotc(&(&rho.matrix * &psi.amps));
    Ok(v.re.clamp(0.0, 1.0))
}

/// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
pub fn state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_space(&rho.space, &sigma.space)?;
    let sqrt_rho = hermitian_sqrt(&rho.matrix);
    let inner = &sqrt_rho * &sigma.matrix * &sqrt_rho;
    let s: f64 = hermitian_eigenvalues(&inner).iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// Trace distance ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let diff = rho - sigma;
    0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>()
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    h.symmetric_eigenvalues().iter().cloned().collect()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).unscale(2.0)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Principal square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues from roundoff are clipped.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let d = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Project a Hermitian matrix onto the positive semidefinite cone with unit trace.
pub fn nearest_density(m: &CMatrix) -> CMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = vals.iter().sum();
    if total > 0.0 {
        vals.iter_mut().for_each(|v| *v /= total);
    }
    let d = CVector::from_iterator(vals.len(), vals.into_iter().map(|l| C64::new(l, 0.0)));
    &eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Unitary on the full space that maps each `sources[k]` to `targets[k]` and
/// acts as close to the identity as possible elsewhere.
///
/// The sources are Löwdin-orthonormalized first. The complement is fixed by
/// rotating span(sources) ∪ span(targets) minimally: on the orthogonal
/// complement of both spans the result is the identity.
pub fn completed_isometry(sources: &[CVector], targets: &[CVector]) -> Result<CMatrix> {
    if sources.is_empty() || sources.len() != targets.len() {
        return Err(Error::InvalidArgument(
            "completed isometry needs equally many non-empty sources and targets".into(),
        ));
    }
    let d = sources[0].len();
    let k = sources.len();
    if sources.iter().chain(targets).any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch("isometry vectors differ in length".into()));
    }
    let s = lowdin(&CMatrix::from_columns(sources))?;
    let t = lowdin(&CMatrix::from_columns(targets))?;
    // Orthonormal basis of span(S) + span(T).
    let joint = orthonormal_basis(&CMatrix::from_fn(d, 2 * k, |i, j| {
        if j < k {
            s[(i, j)]
        } else {
            t[(i, j - k)]
        }
    }));
    // Within the joint subspace, find the unitary W (r×r) with W s̃ = t̃ whose
    // action on the complement of s̃ is the polar factor closest to identity.
    let s_loc = joint.adjoint() * &s;
    let t_loc = joint.adjoint() * &t;
    let s_perp = complement(&s_loc);
    let t_perp = complement(&t_loc);
    let w = if s_perp.ncols() > 0 {
        // Map s_perp to t_perp · V, with V the unitary nearest to t_perp† s_perp.
        let overlap = t_perp.adjoint() * &s_perp;
        let v = polar_unitary(&overlap);
        &t_loc * s_loc.adjoint() + &t_perp * v * s_perp.adjoint()
    } else {
        &t_loc * s_loc.adjoint()
    };
    let projector = &joint * joint.adjoint();
    let eye = CMatrix::identity(d, d);
    Ok(&eye - &projector + &joint * w * joint.adjoint())
}

/// Symmetric (Löwdin) orthonormalization of the columns of `m`.
pub fn lowdin(m: &CMatrix) -> Result<CMatrix> {
    let gram = m.adjoint() * m;
    let eig = hermitian_part(&gram).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < 1e-14) {
        return Err(Error::Numeric("linearly dependent vectors in orthonormalization".into()));
    }
    let d = eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0));
    Ok(m * (&eig.eigenvectors * CMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()))
}

/// Unitary polar factor of a square matrix.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u requested");
    let vt = svd.v_t.expect("svd v_t requested");
    u * vt
}

/// Orthonormal basis of the column span of `m`, from the eigenvectors of m m†.
fn orthonormal_basis(m: &CMatrix) -> CMatrix {
    let gram = m * m.adjoint();
    let eig = hermitian_part(&gram).symmetric_eigen();
    let tol = 1e-10 * eig.eigenvalues.max().max(1.0);
    let cols: Vec<CVector> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > tol)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return CMatrix::zeros(m.nrows(), 0);
    }
    CMatrix::from_columns(&cols)
}

/// Orthonormal basis of the complement of the (orthonormal) columns of `m`.
fn complement(m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    if m.ncols() >= d {
        return CMatrix::zeros(d, 0);
    }
    let p = CMatrix::identity(d, d) - m * m.adjoint();
    let eig = hermitian_part(&p).symmetric_eigen();
    let cols: Vec<CVector> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.5)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return CMatrix::zeros(d, 0);
    }
    CMatrix::from_columns(&cols)
}

pub fn same_space(a: &Space, b: &Space) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "spaces {:?} and {:?} differ",
            a.factors(),
            b.factors()
        )));
    }
    Ok(())
}

/// Spectral norm bound used for step-size checks: the largest eigenvalue
/// magnitude of the Hermitian part.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().fold(0.0, |acc, l| acc.max(l.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn fock(dim: usize, n: usize) -> StateVector {
        StateVector::fock(dim, n).unwrap()
    }

    #[test]
    fn ladder_actions() {
        let a = annihilation(5).unwrap();
        let out = a.apply(&fock(5, 2)).unwrap();
        assert!(close(out.amplitudes()[1].re, 2f64.sqrt(), 1e-15));
        assert!(a.apply(&fock(5, 0)).unwrap().norm() == 0.0);
        let n = creation(5).unwrap().compose(&a).unwrap();
        let out = n.apply(&fock(5, 3)).unwrap();
        assert!(close(out.amplitudes()[3].re, 3.0, 1e-14));
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn commutator_away_from_truncation() {
        let d = 9;
        let a = annihilation(d).unwrap().into_matrix();
        let c = &a * a.adjoint() - a.adjoint() * &a;
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((c[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_conventions() {
        let i2 = Operator::identity(Space::single(2).unwrap());
        let i3 = Operator::identity(Space::single(3).unwrap());
        let t = tensor(&i2, &i3);
        assert_eq!(t.matrix(), &CMatrix::identity(6, 6));
        let zn = tensor(&sigma_z(), &number(4).unwrap());
        let psi = StateVector::basis(Space::qubit_cavity(4).unwrap(), 4 + 2).unwrap();
        let out = zn.apply(&psi).unwrap();
        assert!(close(out.amplitudes()[6].re, -2.0, 1e-15));
        let big = tensor(&Operator::identity(Space::single(2).unwrap()), &number(4).unwrap());
        assert_eq!(big.space().dim(), 8);
    }

    #[test]
    fn partial_traces() {
        let q = StateVector::new(Space::single(2).unwrap(), CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)])).unwrap();
        let c = StateVector::coherent(5, C64::new(0.7, 0.2)).unwrap();
        let rho = q.tensor(&c).to_density();
        let rc = rho.partial_trace(1).unwrap();
        assert!((rc.matrix() - c.to_density().matrix()).norm() < 1e-12);
        let rq = rho.partial_trace(0).unwrap();
        assert!((rq.matrix() - q.to_density().matrix()).norm() < 1e-12);
        assert!(rho.partial_trace(2).is_err());

        let s = 0.5f64.sqrt();
        let mut bell = CVector::zeros(6);
        bell[0] = C64::new(s, 0.0);
        bell[3 + 1] = C64::new(s, 0.0);
        let b = StateVector::new(Space::qubit_cavity(3).unwrap(), bell).unwrap();
        let rq = b.to_density().partial_trace(0).unwrap();
        assert!((rq.matrix() - CMatrix::identity(2, 2).unscale(2.0)).norm() < 1e-12);
    }

    #[test]
    fn fidelities() {
        let a = fock(4, 1);
        assert!(close(pure_fidelity(&a, &a).unwrap(), 1.0, 1e-15));
        assert_eq!(pure_fidelity(&a, &fock(4, 2)).unwrap(), 0.0);
        let rho = fock(2, 0).to_density();
        let mixed = DensityMatrix::maximally_mixed(Space::single(2).unwrap());
        assert!(close(state_fidelity(&rho, &mixed).unwrap(), 0.5, 1e-12));
        assert!(close(state_fidelity(&mixed, &rho).unwrap(), 0.5, 1e-12));
        assert!(pure_fidelity(&a, &fock(3, 1)).is_err());
    }

    #[test]
    fn completed_isometry_maps_and_is_unitary() {
        let d = 6;
        let e = |n: usize| {
            let mut v = CVector::zeros(d);
            v[n] = ONE;
            v
        };
        let s = 0.5f64.sqrt();
        let zero_l = (e(0) + e(4)).scale(s);
        let u = completed_isometry(&[e(3), e(1)], &[zero_l.clone(), e(2)]).unwrap();
        assert!((u.adjoint() * &u - CMatrix::identity(d, d)).norm() < 1e-12);
        assert!((&u * e(3) - &zero_l).norm() < 1e-12);
        assert!((&u * e(1) - e(2)).norm() < 1e-12);
        // Identity on states outside both spans.
        assert!((&u * e(5) - e(5)).norm() < 1e-12);
        // Identity map when sources equal targets.
        let id = completed_isometry(&[zero_l.clone(), e(2)], &[zero_l, e(2)]).unwrap();
        assert!((id - CMatrix::identity(d, d)).norm() < 1e-12);
    }
}
