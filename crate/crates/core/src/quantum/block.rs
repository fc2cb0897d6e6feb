// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Block-diagonal operators.
//!
//! The dispersive Hamiltonian and most propagators in this crate only couple a
//! handful of basis states to each other (fixed photon number, or fixed
//! photon-number difference for superoperators). `BlockOp` finds the connected
//! components of a matrix sparsity pattern and stores one dense block per
//! component, so applying the operator costs the sum of squared block sizes.

use super::{CMatrix, CVector, C64, ZERO};
use crate::Result;

#[derive(Clone, Debug)]
pub struct BlockOp {
    dim: usize,
    blocks: Vec<Block>,
}

#[derive(Clone, Debug)]
struct Block {
    idx: Vec<usize>,
    mat: CMatrix,
}

/// Partition of basis indices into coupled groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    dim: usize,
    groups: Vec<Vec<usize>>,
}

impl Partition {
    /// Connected components of the symmetrized non-zero pattern of the given matrices.
    pub fn from_patterns(mats: &[&CMatrix], tol: f64) -> Partition {
        let dim = mats.first().map_or(0, |m| m.nrows());
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for m in mats {
            for j in 0..dim {
                for i in 0..dim {
                    if i != j && m[(i, j)].norm() > tol {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; dim];
        for i in 0..dim {
            let r = find(&mut parent, i);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(i);
        }
        Partition { dim, groups }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn largest_group(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl BlockOp {
    pub fn from_dense(m: &CMatrix) -> BlockOp {
        let p = Partition::from_patterns(&[m], 0.0);
        Self::with_partition(m, &p)
    }

    /// Extract the blocks of `m` on a given partition; entries coupling
    /// different groups are dropped.
    pub fn with_partition(m: &CMatrix, p: &Partition) -> BlockOp {
        let blocks = p
            .groups
            .iter()
            .map(|idx| Block {
                mat: CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]),
                idx: idx.clone(),
            })
            .collect();
        BlockOp { dim: p.dim, blocks }
    }

    pub fn identity(dim: usize) -> BlockOp {
        BlockOp {
            dim,
            blocks: (0..dim).map(|i| Block { idx: vec![i], mat: CMatrix::identity(1, 1) }).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Apply a blockwise map, e.g. the exponential of each block.
    pub fn try_map(&self, f: impl Fn(&CMatrix) -> Result<CMatrix>) -> Result<BlockOp> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Ok(Block { idx: b.idx.clone(), mat: f(&b.mat)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockOp { dim: self.dim, blocks })
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            for (i, &gi) in b.idx.iter().enumerate() {
                for (j, &gj) in b.idx.iter().enumerate() {
                    m[(gi, gj)] = b.mat[(i, j)];
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim);
        self.apply_into(v.as_slice(), out.as_mut_slice());
        out
    }

    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        for b in &self.blocks {
            let n = b.idx.len();
            if n == 1 {
                out[b.idx[0]] = b.mat[(0, 0)] * v[b.idx[0]];
                continue;
            }
            for i in 0..n {
                let mut acc = ZERO;
                for j in 0..n {
                    acc += b.mat[(i, j)] * v[b.idx[j]];
                }
                out[b.idx[i]] = acc;
            }
        }
    }

    /// Product `self · other` when both share the same partition.
    pub fn compose(&self, other: &BlockOp) -> Option<BlockOp> {
        if self.blocks.len() != other.blocks.len() {
            return None;
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            if a.idx != b.idx {
                return None;
            }
            blocks.push(Block { idx: a.idx.clone(), mat: &a.mat * &b.mat });
        }
        Some(BlockOp { dim: self.dim, blocks })
    }

    /// U ρ U† for a block-diagonal U.
    pub fn sandwich(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for a in &self.blocks {
            for b in &self.blocks {
                let sub = CMatrix::from_fn(a.idx.len(), b.idx.len(), |i, j| rho[(a.idx[i], b.idx[j])]);
                if sub.iter().all(|x| *x == ZERO) {
                    continue;
                }
                let r = &a.mat * sub * b.mat.adjoint();
                for (i, &gi) in a.idx.iter().enumerate() {
                    for (j, &gj) in b.idx.iter().enumerate() {
                        out[(gi, gj)] = r[(i, j)];
                    }
                }
            }
        }
        out
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(|b| b.idx.len()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::expm;

    fn sample() -> CMatrix {
        let mut m = CMatrix::zeros(5, 5);
        m[(0, 3)] = C64::new(1.0, 2.0);
        m[(3, 0)] = C64::new(1.0, -2.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(2, 4)] = C64::new(0.0, 1.0);
        m[(4, 2)] = C64::new(0.0, -1.0);
        m[(4, 4)] = C64::new(-1.0, 0.0);
        m
    }

    #[test]
    fn partition_and_roundtrip() {
        let m = sample();
        let b = BlockOp::from_dense(&m);
        assert_eq!(b.largest_block(), 2);
        assert_eq!(b.to_dense(), m);
        let v = CVector::from_fn(5, |i, _| C64::new(i as f64, 1.0 - i as f64));
        assert!((b.apply(&v) - &m * &v).norm() < 1e-14);
    }

    #[test]
    fn blockwise_exponential_matches_dense() {
        let m = sample().map(|x| x * C64::new(0.0, -0.7));
        let b = BlockOp::from_dense(&m).try_map(expm).unwrap();
        assert!((b.to_dense() - expm(&m).unwrap()).norm() < 1e-13);
        let rho = CMatrix::from_fn(5, 5, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let u = b.to_dense();
        assert!((b.sandwich(&rho) - &u * &rho * u.adjoint()).norm() < 1e-12);
    }
}
