// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::quantum::{CMatrix, C64};
use crate::{Error, Result};

/// Drive quadrature. The matching control Hamiltonians are σx, σy, (a + a†)
/// and i(a − a†).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    QubitI,
    QubitQ,
    CavityI,
    CavityQ,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::QubitI, Channel::QubitQ, Channel::CavityI, Channel::CavityQ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::QubitI => "qubit-I",
            Channel::QubitQ => "qubit-Q",
            Channel::CavityI => "cavity-I",
            Channel::CavityQ => "cavity-Q",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_qubit(self) -> bool {
        matches!(self, Channel::QubitI | Channel::QubitQ)
    }
}

/// Piecewise-constant control amplitudes (rad/s) on the four quadratures.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePulse {
    dt: f64,
    samples: [Vec<f64>; 4],
}

impl PiecewisePulse {
    pub fn new(dt: f64, samples: [Vec<f64>; 4]) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("segment duration must be positive, got {dt}")));
        }
        let n = samples[0].len();
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::DimensionMismatch("pulse channels differ in length".into()));
        }
        if samples.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite pulse sample".into()));
        }
        Ok(Self { dt, samples })
    }

    pub fn zeros(dt: f64, n_segments: usize) -> Result<Self> {
        Self::new(dt, std::array::from_fn(|_| vec![0.0; n_segments]))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_segments(&self) -> usize {
        self.samples[0].len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_segments() as f64
    }

    pub fn channel(&self, ch: Channel) -> &[f64] {
        &self.samples[ch.index()]
    }

    pub fn channel_mut(&mut self, ch: Channel) -> &mut [f64] {
        &mut self.samples[ch.index()]
    }

    pub fn samples(&self) -> &[Vec<f64>; 4] {
        &self.samples
    }

    /// H0 + Σ_c ε_c[k] C_c for segment k.
    pub fn segment_hamiltonian(&self, h0: &CMatrix, controls: &[CMatrix; 4], k: usize) -> CMatrix {
        let mut h = h0.clone();
        for (c, op) in controls.iter().enumerate() {
            let v = self.samples[c][k];
            if v != 0.0 {
                h += op * C64::new(v, 0.0);
            }
        }
        h
    }

    pub fn max_abs(&self, ch: Channel) -> f64 {
        self.channel(ch).iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
