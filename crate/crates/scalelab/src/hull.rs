//! Loss-vs-compute frontier via the minimum envelope.
//!
//! Per model size, runs trace a loss-vs-FLOPs curve. The frontier is the
//! pointwise minimum across sizes of the log-log interpolated curves, and the
//! law L = k*C^c is fitted on the lower convex hull of that envelope.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ols;
use crate::types::{PowerLawFit, RunRecord};

/// All runs of one model size, as (FLOPs, loss) pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HullSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Groups records into per-model-size series (keyed on active parameters),
/// ordered by size.
pub fn series_from_records(records: &[RunRecord]) -> Vec<HullSeries> {
    let mut by_size: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for r in records {
        let e = by_size
            .entry(r.n_active().to_bits())
            .or_insert_with(|| (r.n_active(), Vec::new()));
        e.1.push((r.flops(), r.loss()));
    }
    let mut sizes: Vec<(f64, Vec<(f64, f64)>)> = by_size.into_values().collect();
    sizes.sort_by(|a, b| a.0.total_cmp(&b.0));
    sizes
        .into_iter()
        .map(|(n, points)| HullSeries {
            label: format!("{n:.3e}"),
            points,
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct HullConfig {
    /// Density of the envelope grid in log C.
    pub envelope_points: usize,
}

impl Default for HullConfig {
    fn default() -> Self {
        HullConfig {
            envelope_points: 512,
        }
    }
}

/// Piecewise-linear interpolation in (ln C, ln L); series are clamped to their
/// own compute range (no extrapolation).
fn interp_log(points: &[(f64, f64)], ln_c: f64) -> Option<f64> {
    let first = points.first()?;
    let last = points.last()?;
    if ln_c < first.0 || ln_c > last.0 {
        return None;
    }
    let idx = points.partition_point(|&(x, _)| x < ln_c);
    if idx == 0 {
        return Some(first.1);
    }
    let (x0, y0) = points[idx - 1];
    let (x1, y1) = points[idx];
    if x1 == x0 {
        return Some(y0.min(y1));
    }
    Some(y0 + (y1 - y0) * (ln_c - x0) / (x1 - x0))
}

/// Lower frontier of the runs: per-series log-log interpolation, pointwise
/// minimum on a dense log-spaced compute grid, then the lower convex hull of
/// the envelope. Returns the hull vertices as (C, L).
pub fn frontier_points(series: &[HullSeries], cfg: &HullConfig) -> Result<Vec<(f64, f64)>> {
    if series.is_empty() {
        return Err(Error::EmptySeries("<none>".to_string()));
    }
    let mut logs: Vec<Vec<(f64, f64)>> = Vec::with_capacity(series.len());
    for s in series {
        if s.points.len() < 2 {
            return Err(Error::EmptySeries(s.label.clone()));
        }
        let mut pts = Vec::with_capacity(s.points.len());
        for &(c, l) in &s.points {
            if !(c > 0.0 && l > 0.0 && c.is_finite() && l.is_finite()) {
                return Err(Error::invariant(
                    "series point",
                    format!("series `{}` has non-positive (C, L) = ({c}, {l})", s.label),
                ));
            }
            pts.push((c.ln(), l.ln()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        logs.push(pts);
    }

    let x_lo = logs
        .iter()
        .map(|p| p[0].0)
        .fold(f64::INFINITY, f64::min);
    let x_hi = logs
        .iter()
        .map(|p| p[p.len() - 1].0)
        .fold(f64::NEG_INFINITY, f64::max);
    let n = cfg.envelope_points.max(2);

    // Pointwise minimum across interpolated series; grid cells no series
    // covers are skipped.
    let mut envelope: Vec<(f64, f64)> = Vec::with_capacity(n);
    for i in 0..n {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (n - 1) as f64;
        let mut best = f64::INFINITY;
        for pts in &logs {
            if let Some(y) = interp_log(pts, x) {
                best = best.min(y);
            }
        }
        if best.is_finite() {
            envelope.push((x, best));
        }
    }
    if envelope.len() < 2 {
        return Err(Error::EmptySeries("envelope".to_string()));
    }

    // Lower convex hull, monotone-chain over the x-sorted envelope. The slope
    // comparison carries a small epsilon so interpolation round-off on exactly
    // collinear points still collapses to the segment endpoints.
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &envelope {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let q = hull[hull.len() - 1];
            let slope_oq = (q.1 - o.1) / (q.0 - o.0);
            let slope_op = (p.1 - o.1) / (p.0 - o.0);
            if slope_op <= slope_oq + 1e-12 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(hull.into_iter().map(|(x, y)| (x.exp(), y.exp())).collect())
}

/// Fits L = k*C^c on the hull. The hull polyline is resampled at
/// `envelope_points` log-spaced budgets and the least squares runs on the
/// samples above `c_min_flops`; fitting on the handful of vertices alone
/// over-weights whichever segment happens to be longest.
pub fn fit_compute_law(
    hull: &[(f64, f64)],
    c_min_flops: f64,
    cfg: &HullConfig,
) -> Result<PowerLawFit> {
    let mut pts: Vec<(f64, f64)> = hull.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: pts.len(),
        });
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(c, l)| (c.ln(), l.ln())).collect();
    let (x_lo, x_hi) = (logs[0].0, logs[logs.len() - 1].0);
    let n = cfg.envelope_points.max(2);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let x = x_lo + (x_hi - x_lo) * i as f64 / (n - 1) as f64;
        if x.exp() <= c_min_flops {
            continue;
        }
        if let Some(y) = interp_log(&logs, x) {
            xs.push(x);
            ys.push(y);
        }
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: xs.len(),
        });
    }
    let (c, lnk, r2) = ols(&xs, &ys)?;
    PowerLawFit::new(lnk.exp(), c, xs[0].exp(), xs[xs.len() - 1].exp(), r2)
}
