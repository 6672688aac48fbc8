//! Small shared numeric helpers.

use crate::error::{Error, Result};
use crate::types::PowerLawFit;

/// Ordinary least squares of y on x: returns (slope, intercept, r_squared).
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: xs.len().min(ys.len()),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::invariant("x", "zero variance in the regressor"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let mut ss_res = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let e = y - (slope * x + intercept);
            ss_res += e * e;
        }
        1.0 - ss_res / syy
    };
    Ok((slope, intercept, r2))
}

/// Least-squares power law y = k * x^p fitted in log-log space.
/// Requires strictly positive inputs.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::invariant(
                "power-law input",
                "x and y must be positive and finite",
            ));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (p, lnk, r2) = ols(&lx, &ly)?;
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in xs {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
    }
    PowerLawFit::new(lnk.exp(), p, x_min, x_max, r2)
}

/// Log-spaced grid of `n` points over [lo, hi], inclusive on both ends.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Numerically stable log(sum(exp(t))) with the softmax weights of each term.
pub fn log_sum_exp(terms: &[f64]) -> (f64, Vec<f64>) {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = terms.iter().map(|&t| (t - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    let lse = m + s.ln();
    let w = exps.iter().map(|e| e / s).collect();
    (lse, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let (s, i, r2) = ols(&xs, &ys).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
        assert!((i + 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_exact() {
        let xs = log_space(1e19, 1e22, 16);
        let ys: Vec<f64> = xs.iter().map(|x| 10.0 * x.powf(-0.05)).collect();
        let law = fit_power_law(&xs, &ys).unwrap();
        assert!((law.k() - 10.0).abs() < 1e-9, "k={}", law.k());
        assert!((law.p() + 0.05).abs() < 1e-12);
    }

    #[test]
    fn lse_matches_direct_sum() {
        let (lse, w) = log_sum_exp(&[0.1, -2.0, 3.5]);
        let direct = (0.1f64.exp() + (-2.0f64).exp() + 3.5f64.exp()).ln();
        assert!((lse - direct).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
