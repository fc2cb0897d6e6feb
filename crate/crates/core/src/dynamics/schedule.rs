// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::quantum::{expm, BlockOp, CMatrix, C64};
use crate::quantum::block::Partition;
use crate::{Error, Result};

use super::LindbladPropagator;

/// One piecewise-constant Hamiltonian interval.
#[derive(Clone, Debug)]
pub struct Segment {
    pub h: CMatrix,
    pub duration: f64,
}

/// An ordered list of piecewise-constant Hamiltonian segments.
#[derive(Clone, Debug)]
pub struct Schedule {
    dim: usize,
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(dim: usize) -> Self {
        Self { dim, segments: Vec::new() }
    }

    pub fn constant(h: CMatrix, duration: f64) -> Result<Self> {
        let mut s = Self::new(h.nrows());
        s.push(h, duration)?;
        Ok(s)
    }

    pub fn push(&mut self, h: CMatrix, duration: f64) -> Result<()> {
        if h.nrows() != self.dim || h.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "segment Hamiltonian {}x{} in schedule of dimension {}",
                h.nrows(),
                h.ncols(),
                self.dim
            )));
        }
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::InvalidArgument(format!("segment duration must be non-negative, got {duration}")));
        }
        if duration > 0.0 {
            self.segments.push(Segment { h, duration });
        }
        Ok(())
    }

    pub fn extend(&mut self, other: &Schedule) -> Result<()> {
        for s in &other.segments {
            self.push(s.h.clone(), s.duration)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Partition shared by every segment Hamiltonian.
    pub fn partition(&self, extra: &[&CMatrix]) -> Partition {
        let mut mats: Vec<&CMatrix> = self.segments.iter().map(|s| &s.h).collect();
        mats.extend_from_slice(extra);
        if mats.is_empty() {
            return Partition::from_patterns(&[&CMatrix::zeros(self.dim, self.dim)], 0.0);
        }
        Partition::from_patterns(&mats, 0.0)
    }

    /// Product of the segment propagators, in block form.
    pub fn block_unitary(&self) -> Result<BlockOp> {
        let p = self.partition(&[]);
        let mut u = BlockOp::with_partition(&CMatrix::identity(self.dim, self.dim), &p);
        for s in &self.segments {
            let step = BlockOp::with_partition(&s.h, &p).try_map(|b| expm(&(b * C64::new(0.0, -s.duration))))?;
            u = step.compose(&u).expect("shared partition");
        }
        Ok(u)
    }

    pub fn unitary(&self) -> Result<CMatrix> {
        Ok(self.block_unitary()?.to_dense())
    }
}

#[derive(Clone, Debug)]
enum MeStep {
    Superop(LindbladPropagator),
    Unitary(BlockOp),
}

/// A schedule compiled for density-matrix evolution.
///
/// Segments at least `exact_threshold` long use the exact propagator of the
/// full Lindbladian. Runs of shorter segments use Strang splitting: half a
/// dissipative step, the segment unitary, half a dissipative step, with the
/// interior halves merged.
#[derive(Clone, Debug)]
pub struct MeProgram {
    dim: usize,
    steps: Vec<MeStep>,
}

impl MeProgram {
    pub fn compile(schedule: &Schedule, collapse: &[CMatrix], exact_threshold: f64) -> Result<Self> {
        let dim = schedule.dim();
        let zero = CMatrix::zeros(dim, dim);
        let mut dissipators: HashMap<u64, LindbladPropagator> = HashMap::new();
        let mut dissipator = |t: f64| -> Result<LindbladPropagator> {
            if let Some(p) = dissipators.get(&t.to_bits()) {
                return Ok(p.clone());
            }
            let p = LindbladPropagator::new(&zero, collapse, t)?;
            dissipators.insert(t.to_bits(), p.clone());
            Ok(p)
        };
        let mut steps = Vec::new();
        let segs = schedule.segments();
        let mut i = 0;
        while i < segs.len() {
            if segs[i].duration >= exact_threshold || collapse.is_empty() {
                if collapse.is_empty() {
                    let p = Partition::from_patterns(&[&segs[i].h], 0.0);
                    let u = BlockOp::with_partition(&segs[i].h, &p)
                        .try_map(|b| expm(&(b * C64::new(0.0, -segs[i].duration))))?;
                    steps.push(MeStep::Unitary(u));
                } else {
                    steps.push(MeStep::Superop(LindbladPropagator::new(&segs[i].h, collapse, segs[i].duration)?));
                }
                i += 1;
                continue;
            }
            let start = i;
            while i < segs.len() && segs[i].duration < exact_threshold {
                i += 1;
            }
            let run = &segs[start..i];
            for (k, s) in run.iter().enumerate() {
                let half = 0.5 * s.duration;
                if k == 0 {
                    steps.push(MeStep::Superop(dissipator(half)?));
                }
                let p = Partition::from_patterns(&[&s.h], 0.0);
                let u = BlockOp::with_partition(&s.h, &p).try_map(|b| expm(&(b * C64::new(0.0, -s.duration))))?;
                steps.push(MeStep::Unitary(u));
                let next_half = run.get(k + 1).map_or(0.0, |n| 0.5 * n.duration);
                steps.push(MeStep::Superop(dissipator(half + next_half)?));
            }
        }
        Ok(Self { dim, steps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut r = rho.clone();
        for s in &self.steps {
            r = match s {
                MeStep::Superop(p) => p.apply(&r),
                MeStep::Unitary(u) => u.sandwich(&r),
            };
        }
        r
    }
}
