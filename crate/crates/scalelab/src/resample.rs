//! Bootstrap sensitivity analysis of the fitted coefficients and the derived
//! compute-optimal exponents.
//!
//! RNG contract: per-iteration streams come from Xoshiro256++ generators whose
//! 64-bit seeds are drawn sequentially from a SplitMix64 seeded with the user
//! seed. Results are therefore bit-reproducible across platforms and
//! independent of how iterations are scheduled.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitloss::{self, FitConfig, FitPoint};
use crate::lbfgs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffStats {
    pub mean: f64,
    pub std: f64,
}

/// Per-coefficient mean and sample standard deviation (divisor n-1) over the
/// bootstrap resamples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub e_irreducible: CoeffStats,
    pub alpha: CoeffStats,
    pub beta: CoeffStats,
    pub a: CoeffStats,
    pub b: CoeffStats,
    pub d: CoeffStats,
    pub iterations: usize,
    pub seed: u64,
}

/// Unbiased index draw from `next_u64` via 128-bit widening multiply; pinned
/// here so the byte-level output never depends on a rand version.
fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

fn refit_from_warm_starts(
    points: &[FitPoint],
    config: &FitConfig,
    starts: &[[f64; 5]],
) -> Result<[f64; 5]> {
    let mut best: Option<(f64, usize, [f64; 5])> = None;
    for (i, start) in starts.iter().enumerate() {
        let res = lbfgs::minimize(
            |x| {
                let p = [x[0], x[1], x[2], x[3], x[4]];
                let (f, g) = fitloss::objective(&p, points, config.huber_delta)?;
                Ok((f, g.to_vec()))
            },
            start,
            &config.lbfgs(),
        );
        if let Ok(r) = res {
            let cand = (r.f, i, [r.x[0], r.x[1], r.x[2], r.x[3], r.x[4]]);
            match &best {
                None => best = Some(cand),
                Some((bf, _, _)) => {
                    if r.f < bf - fitloss::TIE_TOLERANCE {
                        best = Some(cand);
                    }
                }
            }
        }
    }
    best.map(|(_, _, p)| p).ok_or(Error::AllInitsFailed)
}

/// Draws `iterations` resamples of size P (the dataset size) with replacement,
/// refits the surface for each (warm-started from the full-data solution with
/// the three best grid initializations as fallbacks), derives the closed-form
/// a, b and d per resample, and reports mean/std per coefficient.
pub fn bootstrap(
    points: &[FitPoint],
    config: &FitConfig,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if iterations < 2 {
        return Err(Error::invariant("iterations", "must be >= 2"));
    }
    let details = fitloss::fit_detailed(points, config)?;
    let mut starts: Vec<[f64; 5]> = vec![details.params];
    starts.extend(details.ranked_inits.iter().cloned());

    let mut seeder = SplitMix64::seed_from_u64(seed);
    let iter_seeds: Vec<u64> = (0..iterations).map(|_| seeder.next_u64()).collect();

    let rows: Vec<Result<[f64; 6]>> = iter_seeds
        .par_iter()
        .enumerate()
        .map(|(idx, &s)| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(s);
            let sample: Vec<FitPoint> = (0..points.len())
                .map(|_| points[uniform_index(&mut rng, points.len())])
                .collect();
            let params =
                refit_from_warm_starts(&sample, config, &starts).map_err(|e| {
                    Error::BootstrapIteration {
                        index: idx,
                        source: Box::new(e),
                    }
                })?;
            let [_, _, e, alpha, beta] = params;
            let a = beta / (alpha + beta);
            let b = 1.0 - a;
            let d = alpha / beta;
            Ok([e.exp(), alpha, beta, a, b, d])
        })
        .collect();

    let mut table = Vec::with_capacity(iterations);
    for row in rows {
        table.push(row?);
    }

    let stat = |col: usize| {
        let n = table.len() as f64;
        let mean = table.iter().map(|r| r[col]).sum::<f64>() / n;
        let var = table
            .iter()
            .map(|r| (r[col] - mean) * (r[col] - mean))
            .sum::<f64>()
            / (n - 1.0);
        CoeffStats {
            mean,
            std: var.sqrt(),
        }
    };

    Ok(BootstrapSummary {
        e_irreducible: stat(0),
        alpha: stat(1),
        beta: stat(2),
        a: stat(3),
        b: stat(4),
        d: stat(5),
        iterations,
        seed,
    })
}
