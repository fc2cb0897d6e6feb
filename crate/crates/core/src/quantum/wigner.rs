// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Wigner function of a truncated cavity state.
//!
//! W(α) = (2/π) Tr[ρ D(α) P D†(α)], evaluated with the closed-form Fock-basis
//! matrix elements of the displaced parity operator (associated Laguerre
//! polynomials), so no displacement matrices need to be built. With this
//! convention a coherent state |β⟩ peaks at α = β.

use std::f64::consts::FRAC_2_PI;

use log::warn;
use nalgebra::DMatrix;

use super::{DensityMatrix, C64, TRUNCATION_TAIL_LIMIT};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct WignerOutput {
    pub values: Vec<f64>,
    pub tail_population: f64,
    pub truncation_warning: bool,
}

/// Wigner values on a rectangular grid; `values[(row, col)]` is W(xs[col] + i·ys[row]).
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: DMatrix<f64>,
    pub truncation_warning: bool,
}

pub fn wigner(rho: &DensityMatrix, grid: &[C64]) -> Result<WignerOutput> {
    if rho.space().factors().len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "wigner needs a single-cavity state, got factors {:?}",
            rho.space().factors()
        )));
    }
    let tail = rho.truncation_tail();
    let truncation_warning = tail > TRUNCATION_TAIL_LIMIT;
    if truncation_warning {
        warn!("cavity truncation tail population {tail:.3e} exceeds {TRUNCATION_TAIL_LIMIT:.0e}");
    }
    let m = rho.matrix();
    let d = m.nrows();
    let values = grid
        .iter()
        .map(|&alpha| {
            let x = 4.0 * alpha.norm_sqr();
            let mut acc = 0.0;
            for k in 0..d {
                // Off-diagonal distance k: terms ρ_{m, m+k}.
                let lag = laguerre_column(d - k, k, x);
                let two_alpha_k = (alpha * 2.0).powu(k as u32);
                for mm in 0..d - k {
                    let sign = if mm % 2 == 0 { 1.0 } else { -1.0 };
                    let ratio = factorial_ratio_sqrt(mm, mm + k);
                    let base = sign * ratio * lag[mm];
                    if k == 0 {
                        acc += base * m[(mm, mm)].re;
                    } else {
                        acc += 2.0 * base * (m[(mm, mm + k)] * two_alpha_k).re;
                    }
                }
            }
            FRAC_2_PI * (-2.0 * alpha.norm_sqr()).exp() * acc
        })
        .collect();
    Ok(WignerOutput { values, tail_population: tail, truncation_warning })
}

pub fn wigner_grid(rho: &DensityMatrix, xs: &[f64], ys: &[f64]) -> Result<WignerGrid> {
    let points: Vec<C64> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| C64::new(x, y))).collect();
    let out = wigner(rho, &points)?;
    let values = DMatrix::from_row_iterator(ys.len(), xs.len(), out.values);
    Ok(WignerGrid { xs: xs.to_vec(), ys: ys.to_vec(), values, truncation_warning: out.truncation_warning })
}

/// L_m^{(k)}(x) for m = 0..count.
fn laguerre_column(count: usize, k: usize, x: f64) -> Vec<f64> {
    let kf = k as f64;
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(1.0);
    if count > 1 {
        out.push(1.0 + kf - x);
    }
    for j in 1..count.saturating_sub(1) {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * out[j] - (jf + kf) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// √(m!/n!) for m ≤ n.
fn factorial_ratio_sqrt(m: usize, n: usize) -> f64 {
    ((m + 1)..=n).fold(1.0, |acc, j| acc / (j as f64).sqrt())
}
