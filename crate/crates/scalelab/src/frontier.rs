//! Compute-optimal allocation laws, derived two ways: a closed form from the
//! fitted surface, and the regression route (per-budget argmin over a token
//! grid, then log-log least squares).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitloss::predict_loss;
use crate::numeric::{fit_power_law, log_space, ols};
use crate::types::{FrontierLaws, FrontierSource, LossSurfaceFit, PowerLawFit, RunRecord};

/// Default coefficient multiplying N_v in the late-fusion budget relation.
pub const DEFAULT_VISION_OFFSET: f64 = 0.483;

/// Compute span reported for closed-form laws, matching the budget range the
/// run charts cover.
const CLOSED_FORM_FLOPS_RANGE: (f64, f64) = (2e18, 2e22);

/// How model size follows from a budget C at a candidate token count D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BudgetRelation {
    /// N = C / (6D).
    Early,
    /// Total N solves N = C/(6D) + offset*N_v with N_v = p*N + q.
    Late { p: f64, q: f64, offset: f64 },
}

impl BudgetRelation {
    pub fn params_for(&self, c: f64, d: f64) -> Result<f64> {
        match *self {
            BudgetRelation::Early => Ok(c / (6.0 * d)),
            BudgetRelation::Late { p, q, offset } => late_budget_relation(c, d, p, q, offset),
        }
    }
}

/// Solves N = C/(6D) + offset*N_v together with the linear vision-size model
/// N_v = p*N + q: N = (C/(6D) + offset*q) / (1 - offset*p).
pub fn late_budget_relation(c: f64, d: f64, p: f64, q: f64, offset: f64) -> Result<f64> {
    let denom = 1.0 - offset * p;
    if denom <= 0.0 {
        return Err(Error::SingularRelation(denom));
    }
    if offset * p < 0.0 {
        return Err(Error::invariant(
            "vision_offset*p",
            "must be non-negative and < 1",
        ));
    }
    Ok((c / (6.0 * d) + offset * q) / denom)
}

/// Least-squares line N_v = p*N_total + q over late-fusion records.
pub fn fit_vision_linear(records: &[RunRecord]) -> Result<(f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        if let Some(nv) = r.n_vision() {
            xs.push(r.n_total());
            ys.push(nv);
        }
    }
    let distinct = {
        let mut v = xs.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if distinct < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: distinct,
        });
    }
    let (p, q, _) = ols(&xs, &ys)?;
    Ok((p, q))
}

/// Closed-form frontier for C = 6ND:
///   a = beta/(alpha+beta), b = 1 - a, d = b/a,
///   N_opt = G*(C/6)^a with G = (alpha*A / (beta*B))^(1/(alpha+beta)).
pub fn closed_form_frontier(fit: &LossSurfaceFit) -> Result<FrontierLaws> {
    let (alpha, beta) = (fit.alpha(), fit.beta());
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidFit(format!(
            "closed form needs alpha, beta > 0, got ({alpha}, {beta})"
        )));
    }
    if !(fit.a_coef() > 0.0 && fit.b_coef() > 0.0) {
        return Err(Error::InvalidFit(
            "closed form needs positive A and B".to_string(),
        ));
    }
    let a = beta / (alpha + beta);
    let b = 1.0 - a;
    let g = (alpha * fit.a_coef() / (beta * fit.b_coef())).powf(1.0 / (alpha + beta));

    let (c_lo, c_hi) = CLOSED_FORM_FLOPS_RANGE;
    // N = G*(C/6)^a = [G*6^-a] * C^a, D = C/(6N) = [6^-b/G] * C^b.
    let k_n = g * 6f64.powf(-a);
    let k_d = 6f64.powf(-b) / g;
    let n_of_c = PowerLawFit::new(k_n, a, c_lo, c_hi, 1.0)?;
    let d_of_c = PowerLawFit::new(k_d, b, c_lo, c_hi, 1.0)?;
    // D as a function of N along the frontier: D = G^(-1/a) * N^(b/a).
    let d_of_n = PowerLawFit::new(
        g.powf(-1.0 / a),
        b / a,
        n_of_c.eval(c_lo),
        n_of_c.eval(c_hi),
        1.0,
    )?;
    // N/D = G^2 * (C/6)^(a-b).
    let ratio_of_c = PowerLawFit::new(g * g * 6f64.powf(b - a), a - b, c_lo, c_hi, 1.0)?;
    FrontierLaws::new(
        n_of_c,
        d_of_c,
        d_of_n,
        ratio_of_c,
        FrontierSource::ClosedForm,
    )
}

/// Token-grid settings for the regression route.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TokenGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for TokenGrid {
    fn default() -> Self {
        // Log-spaced 10B..600B; the argmin is scale-free in log space.
        TokenGrid {
            min: 1e10,
            max: 6e11,
            points: 200,
        }
    }
}

/// Per-budget argmin over the token grid, then ordinary least squares in log
/// space for N(C), D(C), D(N) and N/D (C).
pub fn regress_frontier(
    fit: &LossSurfaceFit,
    relation: &BudgetRelation,
    flops_values: &[f64],
    grid: &TokenGrid,
) -> Result<FrontierLaws> {
    let mut cs: Vec<f64> = flops_values.to_vec();
    cs.sort_by(f64::total_cmp);
    cs.dedup();
    if cs.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: cs.len(),
        });
    }
    if !(grid.min > 0.0 && grid.max > grid.min && grid.points >= 2) {
        return Err(Error::invariant("token grid", "need 0 < min < max, points >= 2"));
    }
    let ds = log_space(grid.min, grid.max, grid.points);

    let mut n_opt = Vec::with_capacity(cs.len());
    let mut d_opt = Vec::with_capacity(cs.len());
    let mut boundary = 0usize;
    for &c in &cs {
        let mut best: Option<(f64, usize, f64)> = None; // (loss, index, n)
        for (i, &d) in ds.iter().enumerate() {
            let n = relation.params_for(c, d)?.max(1.0);
            let loss = predict_loss(fit, n, d.max(1.0));
            if best.is_none_or(|(bl, _, _)| loss < bl) {
                best = Some((loss, i, n));
            }
        }
        let (_, i, n) = best.expect("grid is non-empty");
        if i == 0 || i == ds.len() - 1 {
            boundary += 1;
        }
        n_opt.push(n);
        d_opt.push(ds[i]);
    }
    if boundary == cs.len() {
        return Err(Error::DegenerateGrid);
    }

    let n_of_c = fit_power_law(&cs, &n_opt)?;
    let d_of_c = fit_power_law(&cs, &d_opt)?;
    let d_of_n = fit_power_law(&n_opt, &d_opt)?;
    let ratio: Vec<f64> = n_opt.iter().zip(&d_opt).map(|(n, d)| n / d).collect();
    let ratio_of_c = fit_power_law(&cs, &ratio)?;
    FrontierLaws::new(n_of_c, d_of_c, d_of_n, ratio_of_c, FrontierSource::Regression)
}
