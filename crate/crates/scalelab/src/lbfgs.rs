//! Limited-memory quasi-Newton minimizer with a backtracking Armijo line
//! search. Two-loop recursion over the last `history` curvature pairs, H0
//! scaled by s.y/y.y. Deterministic: no randomness, no threading.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    pub max_iterations: usize,
    /// Converged when the gradient infinity-norm drops below this.
    pub gradient_tolerance: f64,
    /// Converged when the relative objective decrease over one iteration
    /// drops below this.
    pub f_rel_tolerance: f64,
    pub history: usize,
    pub armijo_c1: f64,
    pub backtrack_shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            max_iterations: 1000,
            gradient_tolerance: 1e-9,
            f_rel_tolerance: 1e-12,
            history: 10,
            armijo_c1: 1e-4,
            backtrack_shrink: 0.5,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `func` (value and gradient) starting at `x0`.
/// Fails with `NonFiniteObjective` if the starting point evaluates non-finite;
/// a non-finite trial point during line search is treated as a rejected step.
pub fn minimize<F>(mut func: F, x0: &[f64], cfg: &LbfgsConfig) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = func(&x)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteObjective);
    }

    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    for iter in 0..cfg.max_iterations {
        if inf_norm(&g) < cfg.gradient_tolerance {
            return Ok(LbfgsResult {
                x,
                f,
                converged: true,
                iterations: iter,
            });
        }

        // Two-loop recursion for d = -H*g.
        let mut q = g.clone();
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            alpha[i] = rho_hist[i] * dot(&s_hist[i], &q);
            for j in 0..n {
                q[j] -= alpha[i] * y_hist[i][j];
            }
        }
        if m > 0 {
            let sy = dot(&s_hist[m - 1], &y_hist[m - 1]);
            let yy = dot(&y_hist[m - 1], &y_hist[m - 1]);
            let gamma = if yy > 0.0 { sy / yy } else { 1.0 };
            for v in q.iter_mut() {
                *v *= gamma;
            }
        }
        for i in 0..m {
            let beta = rho_hist[i] * dot(&y_hist[i], &q);
            for j in 0..n {
                q[j] += (alpha[i] - beta) * s_hist[i][j];
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();

        let mut gd = dot(&g, &d);
        if gd >= 0.0 {
            // Not a descent direction; drop the history and fall back to
            // steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = g.iter().map(|v| -v).collect();
            gd = dot(&g, &d);
            if gd >= 0.0 {
                // Gradient is exactly zero.
                return Ok(LbfgsResult {
                    x,
                    f,
                    converged: true,
                    iterations: iter,
                });
            }
        }

        // Backtracking line search with the Armijo condition.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = func(&xt)?;
            if ft.is_finite() && ft <= f + cfg.armijo_c1 * t * gd {
                accepted = Some((xt, ft, gt));
                break;
            }
            t *= cfg.backtrack_shrink;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // Line search exhausted; no further progress possible from here.
            return Ok(LbfgsResult {
                x,
                f,
                converged: false,
                iterations: iter,
            });
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let ss = dot(&s, &s);
        let yy = dot(&y, &y);
        // Curvature guard: skip updates that would break positive definiteness.
        if sy > 1e-10 * (ss * yy).sqrt() {
            if s_hist.len() == cfg.history {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            rho_hist.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }

        let decrease = f - f_new;
        let rel = decrease / f.abs().max(1e-300);
        x = x_new;
        g = g_new;
        f = f_new;
        if rel >= 0.0 && rel < cfg.f_rel_tolerance {
            return Ok(LbfgsResult {
                x,
                f,
                converged: true,
                iterations: iter + 1,
            });
        }
    }

    Ok(LbfgsResult {
        x,
        f,
        converged: false,
        iterations: cfg.max_iterations,
    })
}
