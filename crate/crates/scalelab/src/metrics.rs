//! Prediction-quality metrics for held-in/held-out evaluation of fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitloss::{predict_loss, FitPoint};
use crate::types::LossSurfaceFit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mse: f64,
    pub r_squared: f64,
    /// Mean absolute error as a percentage of the observed loss.
    pub mae_percent: f64,
}

pub fn evaluate(fit: &LossSurfaceFit, points: &[FitPoint]) -> Result<EvalMetrics> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean = points.iter().map(|p| p.loss).sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut mae = 0.0;
    for p in points {
        let pred = predict_loss(fit, p.n, p.d);
        ss_res += (pred - p.loss) * (pred - p.loss);
        ss_tot += (p.loss - mean) * (p.loss - mean);
        mae += (pred - p.loss).abs() / p.loss;
    }
    if ss_tot == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(EvalMetrics {
        mse: ss_res / n,
        r_squared: 1.0 - ss_res / ss_tot,
        mae_percent: 100.0 * mae / n,
    })
}
