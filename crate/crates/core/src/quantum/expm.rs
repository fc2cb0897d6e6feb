// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Matrix exponential by Padé approximation with scaling and squaring
//! (Higham 2005 degree selection).

use super::{CMatrix, Operator, C64};
use crate::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// exp(scale · h).
pub fn matrix_exponential(h: &Operator, scale: C64) -> Result<Operator> {
    let m = h.matrix().map(|x| x * scale);
    let e = expm(&m)?;
    Operator::new(h.space().clone(), e, format!("exp({})", h.label()))
}

/// Exponential of a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch("expm needs a square matrix".into()));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::Numeric("non-finite entry in matrix exponential input".into()));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    for &(m, theta) in &THETA {
        if norm <= theta {
            return pade(a, m);
        }
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let scaled = a.unscale(2f64.powi(s));
    let mut r = pade(&scaled, 13)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade(a: &CMatrix, m: usize) -> Result<CMatrix> {
    let n = a.nrows();
    let eye = CMatrix::identity(n, n);
    let a2 = a * a;
    let (u, v) = match m {
        3 | 5 | 7 | 9 => {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            // Even powers I, A², A⁴, ...
            let mut powers = vec![eye.clone(), a2.clone()];
            while powers.len() < m.div_ceil(2) {
                let next = powers.last().unwrap() * &a2;
                powers.push(next);
            }
            let mut u = CMatrix::zeros(n, n);
            let mut v = CMatrix::zeros(n, n);
            for (k, p) in powers.iter().enumerate() {
                u += p * C64::new(b[2 * k + 1], 0.0);
                v += p * C64::new(b[2 * k], 0.0);
            }
            (a * u, v)
        }
        13 => {
            let b = &B13;
            let c = |k: usize| C64::new(b[k], 0.0);
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
                + &a6 * c(7)
                + &a4 * c(5)
                + &a2 * c(3)
                + &eye * c(1);
            let u = a * u_inner;
            let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
                + &a6 * c(6)
                + &a4 * c(4)
                + &a2 * c(2)
                + &eye * c(0);
            (u, v)
        }
        _ => unreachable!("unsupported Padé degree"),
    };
    let p = &v + &u;
    let q = &v - &u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Numeric("singular Padé denominator in matrix exponential".into()))
}

fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
