// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Limited-memory BFGS minimization with an Armijo backtracking line search.

use std::collections::VecDeque;

/// Settings of the minimizer.
#[derive(Clone, Debug)]
pub struct LbfgsConfig {
    pub max_iter: usize,
    /// Stop when the gradient infinity norm falls below this value.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease over an iteration falls below this value.
    pub f_tol: f64,
    /// Number of stored curvature pairs.
    pub memory: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-8, f_tol: 1e-14, memory: 12 }
    }
}

/// Why the minimizer stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Stalled,
    MaxIter,
    LineSearch,
    Callback,
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimize `f` from `x0`. `eval` returns the value and gradient. `on_accept`
/// is called after every accepted step with (iteration, x, f, g) and may
/// return false to stop early.
pub fn minimize(
    mut eval: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    cfg: &LbfgsConfig,
    mut on_accept: impl FnMut(usize, &[f64], f64, &[f64]) -> bool,
) -> LbfgsOutcome {
    let mut x = x0;
    let (mut f, mut g) = eval(&x);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;
    for it in 0..cfg.max_iter {
        if inf_norm(&g) < cfg.grad_tol {
            termination = Termination::Gradient;
            break;
        }
        // Two-loop recursion for d = −H g.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = pairs.back().map_or_else(|| 1.0 / inf_norm(&g).max(1e-300), |(s, y, _)| dot(s, y) / dot(y, y));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v / inf_norm(&g).max(1e-300)).collect();
            slope = dot(&g, &d);
        }
        // Armijo backtracking.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fn_, gn) = eval(&xn);
            if fn_.is_finite() && fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            termination = Termination::LineSearch;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let decrease = f - fn_;
        x = xn;
        f = fn_;
        g = gn;
        iterations = it + 1;
        if !on_accept(iterations, &x, f, &g) {
            termination = Termination::Callback;
            break;
        }
        if decrease <= cfg.f_tol * f.abs().max(1.0) {
            termination = Termination::Stalled;
            break;
        }
    }
    LbfgsOutcome { x, f, iterations, termination }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let eval = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (f, g)
        };
        let cfg = LbfgsConfig { max_iter: 1000, grad_tol: 1e-10, ..Default::default() };
        let mut fs = Vec::new();
        let out = minimize(eval, vec![-1.2, 1.0], &cfg, |_, _, f, _| {
            fs.push(f);
            true
        });
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{:?}", out);
        assert!(fs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_converges_fast() {
        let diag = [1.0, 10.0, 100.0, 0.5];
        let eval = |x: &[f64]| {
            let f = x.iter().zip(&diag).map(|(v, d)| 0.5 * d * v * v).sum();
            (f, x.iter().zip(&diag).map(|(v, d)| d * v).collect())
        };
        let out = minimize(eval, vec![1.0; 4], &LbfgsConfig::default(), |_, _, _, _| true);
        assert!(out.x.iter().all(|v| v.abs() < 1e-6), "{:?}", out);
        assert!(out.iterations < 30);
    }
}
