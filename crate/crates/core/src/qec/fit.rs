// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exponential decay fits F(t) = A e^{−t/τ} + 0.25 by Levenberg–Marquardt.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Floor of a fully depolarized single-qubit process fidelity.
pub const DECAY_OFFSET: f64 = 0.25;

const MAX_ITER: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    /// Lifetime τ (s).
    pub lifetime: f64,
    pub offset: f64,
    /// √(Σ residual²).
    pub residual_norm: f64,
    pub amplitude_se: f64,
    pub lifetime_se: f64,
}

fn fail(reason: impl Into<String>, residual_norm: f64) -> Error {
    Error::Fit { reason: reason.into(), residual_norm }
}

fn residuals(points: &[(f64, f64)], a: f64, k: f64) -> Vec<f64> {
    points.iter().map(|&(t, y)| y - DECAY_OFFSET - a * (-k * t).exp()).collect()
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Least-squares fit of (time, F_χ) points to A e^{−t/τ} + 0.25.
///
/// The model is fitted in (A, k = 1/τ); standard errors come from the
/// Jacobian at the optimum with the residual variance RSS/(n − 2) (or the
/// bare curvature when the fit is exact).
pub fn fit_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    if points.len() < 3 {
        return Err(fail(format!("need at least 3 points, got {}", points.len()), 0.0));
    }
    if points.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return Err(fail("non-finite data", f64::NAN));
    }
    let mut ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    ts.sort_by(f64::total_cmp);
    if ts.windows(2).any(|w| w[1] - w[0] <= 0.0) {
        return Err(fail("times must be distinct", 0.0));
    }
    let span = ts[ts.len() - 1] - ts[0];

    // Log-linear initial guess from points above the offset.
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(_, y)| *y - DECAY_OFFSET > 1e-9).map(|&(t, y)| (t, (y - DECAY_OFFSET).ln())).collect();
    let (mut a, mut k) = if logs.len() >= 2 {
        let n = logs.len() as f64;
        let mt = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = logs.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let sxy: f64 = logs.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        ((my - slope * mt).exp(), (-slope).max(1.0 / (100.0 * span)))
    } else {
        (points[0].1 - DECAY_OFFSET, 1.0 / span)
    };

    let mut r = residuals(points, a, k);
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITER {
        // Normal equations in (A, k·span) for conditioning.
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for (&(t, _), &ri) in points.iter().zip(&r) {
            let e = (-k * t).exp();
            let j = [e, -a * t * e * span];
            for p in 0..2 {
                jtr[p] += j[p] * ri;
                for q in 0..2 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let m = [[jtj[0][0] * (1.0 + lambda), jtj[0][1]], [jtj[1][0], jtj[1][1] * (1.0 + lambda)]];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if !(det.abs() > 0.0) {
                lambda *= 10.0;
                continue;
            }
            let da = (m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
            let dk = (m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det / span;
            let (na, nk) = (a + da, k + dk);
            let nr = residuals(points, na, nk);
            let nc = sum_sq(&nr);
            if nc.is_finite() && nc <= cost {
                let rel = (cost - nc) / cost.max(f64::MIN_POSITIVE);
                let step = (da / a.abs().max(1e-300)).abs().max((dk / k.abs().max(1e-300)).abs());
                a = na;
                k = nk;
                r = nr;
                cost = nc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-15 && step > 1e-13;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let residual_norm = cost.sqrt();
    if !(a.abs() > 1e-6) {
        return Err(fail(format!("amplitude {a:.3e} is indistinguishable from zero; lifetime unidentifiable"), residual_norm));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(fail(format!("non-positive decay rate {k:.3e}"), residual_norm));
    }
    // Covariance in (A, k).
    let (mut jtj, n) = ([[0.0; 2]; 2], points.len());
    for &(t, _) in points {
        let e = (-k * t).exp();
        let j = [e, -a * t * e];
        for p in 0..2 {
            for q in 0..2 {
                jtj[p][q] += j[p] * j[q];
            }
        }
    }
    let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    if !(det > 0.0) {
        return Err(fail("singular Jacobian at the optimum", residual_norm));
    }
    let s2 = if n > 2 { cost / (n - 2) as f64 } else { 0.0 };
    let var_a = s2 * jtj[1][1] / det;
    let var_k = s2 * jtj[0][0] / det;
    Ok(DecayFit {
        amplitude: a,
        lifetime: 1.0 / k,
        offset: DECAY_OFFSET,
        residual_norm,
        amplitude_se: var_a.sqrt(),
        lifetime_se: var_k.sqrt() / (k * k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Box–Muller standard normal.
    fn normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn curve(a: f64, tau: f64, n: usize, t_max: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = t_max * i as f64 / (n - 1) as f64;
                (t, a * (-t / tau).exp() + DECAY_OFFSET)
            })
            .collect()
    }

    #[test]
    fn noise_free_recovery() {
        let pts = curve(0.71, 755e-6, 12, 1.1e-3);
        let f = fit_decay(&pts).unwrap();
        assert!((f.amplitude / 0.71 - 1.0).abs() < 1e-6);
        assert!((f.lifetime / 755e-6 - 1.0).abs() < 1e-6);
        assert!(f.residual_norm < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let flat: Vec<(f64, f64)> = (0..8).map(|i| (i as f64 * 1e-4, 0.25)).collect();
        assert!(matches!(fit_decay(&flat), Err(Error::Fit { .. })));
        assert!(fit_decay(&[(0.0, 1.0), (1.0, 0.5)]).is_err());
        assert!(fit_decay(&[(0.0, 1.0), (0.0, 0.9), (1.0, 0.5)]).is_err());
    }

    #[test]
    fn noisy_coverage() {
        let truth = 755e-6;
        let mut rng = crate::rng::stream(11, 0);
        let seeds = 200;
        let mut covered = 0;
        for _ in 0..seeds {
            let pts: Vec<(f64, f64)> = curve(0.71, truth, 12, 1.1e-3)
                .into_iter()
                .map(|(t, y)| (t, y + 0.01 * normal(&mut rng)))
                .collect();
            let f = fit_decay(&pts).unwrap();
            if (f.lifetime - truth).abs() <= 3.0 * f.lifetime_se {
                covered += 1;
            }
        }
        assert!(covered as f64 >= 0.95 * seeds as f64, "coverage {covered}/{seeds}");
    }
}
