//! Bundled example datasets, digitized from published training-run charts.
//!
//! Each loss-vs-FLOPs series is stored as run records: the model size comes
//! from the chart legend and the token count is recovered from the plotted
//! budget as D = C/(6N) (for late fusion, D = C / (6*(N_total - 0.456*N_v))).
//! Coordinates carry 3-4 significant digits, so fits on these fixtures are
//! expected to land near, not exactly on, the published constants. Every row
//! names its source chart in the `figure` column.

use crate::error::{Error, Result};
use crate::ingest::{parse_assignments_csv, parse_runs_csv};
use crate::types::{AssignmentTable, RunRecord};

macro_rules! bundled {
    ($name:ident, $file:literal) => {
        pub fn $name() -> Result<Vec<RunRecord>> {
            load_bundled(include_str!(concat!("../data/", $file)))
        }
    };
}

fn load_bundled(raw: &str) -> Result<Vec<RunRecord>> {
    let records = parse_runs_csv(raw.as_bytes())?;
    for r in &records {
        if r.figure().is_none() {
            return Err(Error::invariant(
                "figure",
                format!("bundled fixture row `{}` lacks provenance", r.run_id()),
            ));
        }
    }
    Ok(records)
}

// Early-fusion runs, averaged loss, one file per training mixture.
bundled!(early_45_45_10_avg, "runs_early_45-45-10_avg.csv");
bundled!(early_30_30_40_avg, "runs_early_30-30-40_avg.csv");
bundled!(early_40_20_40_avg, "runs_early_40-20-40_avg.csv");
bundled!(early_20_40_40_avg, "runs_early_20-40-40_avg.csv");
// Sparse (top-1 of 8 experts) runs on the default mixture.
bundled!(moe_45_45_10_avg, "runs_moe_45-45-10_avg.csv");
// Late-fusion runs on the default mixture.
bundled!(late_45_45_10_avg, "runs_late_45-45-10_avg.csv");
// Held-out 8.13B observations for extrapolation checks.
bundled!(early_8b_heldout_avg, "runs_early_8b_heldout_avg.csv");
// Early vs late series split by evaluation data type.
bundled!(early_late_per_datatype, "runs_early_late_per_datatype.csv");

/// Synthetic 4-layer, 8-expert routing table for the specialization metrics.
pub fn demo_assignments() -> Result<Vec<AssignmentTable>> {
    parse_assignments_csv(include_str!("../data/assignments_demo.csv").as_bytes())
}

/// Published per-layer entropy specialization scores (display reference; the
/// underlying token counts are not public, so these cannot be recomputed).
pub fn specialization_reference() -> Result<Vec<(String, usize, f64)>> {
    let raw = include_str!("../data/specialization_scores.csv");
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate().skip(1) {
        let mut parts = line.split(',');
        let (src, layer, score) = (parts.next(), parts.next(), parts.next());
        match (src, layer, score) {
            (Some(s), Some(l), Some(v)) => out.push((
                s.to_string(),
                l.parse().map_err(|e| Error::Parse {
                    line: i + 1,
                    col: 2,
                    msg: format!("{e}"),
                })?,
                v.parse().map_err(|e| Error::Parse {
                    line: i + 1,
                    col: 3,
                    msg: format!("{e}"),
                })?,
            )),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    col: 1,
                    msg: "expected source,layer,score".to_string(),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{validate_dataset, Arch};

    #[test]
    fn all_bundles_load_and_validate() {
        for (name, recs) in [
            ("early", early_45_45_10_avg().unwrap()),
            ("m303040", early_30_30_40_avg().unwrap()),
            ("m402040", early_40_20_40_avg().unwrap()),
            ("m204040", early_20_40_40_avg().unwrap()),
            ("moe", moe_45_45_10_avg().unwrap()),
            ("late", late_45_45_10_avg().unwrap()),
            ("heldout", early_8b_heldout_avg().unwrap()),
            ("datatype", early_late_per_datatype().unwrap()),
        ] {
            let ds = validate_dataset(recs).unwrap();
            assert!(ds.num_groups() >= 1, "{name}");
        }
    }

    #[test]
    fn default_mixture_bundle_shape() {
        let recs = early_45_45_10_avg().unwrap();
        assert_eq!(recs.len(), 75);
        let sizes: std::collections::BTreeSet<u64> =
            recs.iter().map(|r| r.n_active().to_bits()).collect();
        assert_eq!(sizes.len(), 6);
        assert!(recs.iter().all(|r| r.arch() == Arch::Early));
        assert!(recs.iter().all(|r| r.figure().is_some()));
    }

    #[test]
    fn moe_bundle_is_top1_of_8() {
        let recs = moe_45_45_10_avg().unwrap();
        for r in &recs {
            assert!((r.sparsity() - 0.875).abs() < 1e-12);
        }
    }

    #[test]
    fn late_bundle_has_vision_sizes() {
        let recs = late_45_45_10_avg().unwrap();
        assert!(recs.iter().all(|r| r.n_vision().is_some()));
        assert!(recs
            .iter()
            .all(|r| r.vision_token_fraction() == Some(0.544)));
    }

    #[test]
    fn vision_sizes_are_nearly_linear_in_total_size() {
        let recs = late_45_45_10_avg().unwrap();
        let (p, q) = crate::frontier::fit_vision_linear(&recs).unwrap();
        for r in &recs {
            let nv = r.n_vision().unwrap();
            let predicted = p * r.n_total() + q;
            assert!(
                (predicted - nv).abs() / nv < 0.05,
                "size {}: residual {:.1}%",
                r.n_total(),
                100.0 * (predicted - nv).abs() / nv
            );
        }
    }

    #[test]
    fn hull_excludes_points_dominated_by_larger_models() {
        // Brute-force dominance oracle: every hull vertex must sit at or
        // below every series' log-log interpolation at that budget.
        let recs = early_45_45_10_avg().unwrap();
        let series = crate::hull::series_from_records(&recs);
        let vertices =
            crate::hull::frontier_points(&series, &crate::hull::HullConfig::default()).unwrap();
        for s in &series {
            let mut pts: Vec<(f64, f64)> =
                s.points.iter().map(|&(c, l)| (c.ln(), l.ln())).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for &(c, l) in &vertices {
                let x = c.ln();
                if x < pts[0].0 || x > pts[pts.len() - 1].0 {
                    continue;
                }
                let i = pts.partition_point(|&(px, _)| px < x).max(1);
                let (x0, y0) = pts[i - 1];
                let (x1, y1) = pts[i.min(pts.len() - 1)];
                let y = if x1 == x0 {
                    y0
                } else {
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                };
                assert!(
                    l.ln() <= y + 1e-12,
                    "hull vertex at C={c:.3e} sits above series {}",
                    s.label
                );
            }
        }
    }

    #[test]
    fn demo_assignment_table_loads() {
        let tables = demo_assignments().unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].num_layers(), 4);
        assert_eq!(tables[0].num_experts(), 8);
    }

    #[test]
    fn specialization_reference_scores_are_in_range() {
        let rows = specialization_reference().unwrap();
        assert_eq!(rows.len(), 48);
        assert!(rows.iter().all(|(_, _, s)| (0.0..=1.0).contains(s)));
        // Layer 0 shows the strongest specialization on the caption source.
        let first = rows
            .iter()
            .find(|(src, layer, _)| src == "hqitp" && *layer == 0)
            .unwrap();
        assert!((first.2 - 0.9769).abs() < 1e-3);
    }
}
