//! Expert-specialization metrics over routing assignment logs.

use crate::error::{Error, Result};
use crate::types::AssignmentTable;

/// Share of text tokens in the cell: p = text / (text + image).
pub fn expert_distribution(table: &AssignmentTable, layer: usize, expert: usize) -> Result<f64> {
    let cell = table.cell(layer, expert)?;
    let total = cell.text_tokens + cell.image_tokens;
    if total == 0 {
        return Err(Error::EmptyExpert { layer, expert });
    }
    Ok(cell.text_tokens as f64 / total as f64)
}

/// Base-2 binary entropy; H(0) = H(1) = 0 by continuity.
fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Mean over the layer's experts of 1 - H2(p), p the expert's text share.
/// Pure experts score 1, perfectly mixed ones 0. Experts that received no
/// tokens are excluded from the mean.
pub fn entropy_specialization(table: &AssignmentTable, layer: usize) -> Result<f64> {
    if layer >= table.num_layers() {
        return Err(Error::LayerNotFound {
            layer,
            num_layers: table.num_layers(),
        });
    }
    let mut sum = 0.0;
    let mut active = 0usize;
    for expert in 0..table.num_experts() {
        match expert_distribution(table, layer, expert) {
            Ok(p) => {
                sum += 1.0 - binary_entropy(p);
                active += 1;
            }
            Err(Error::EmptyExpert { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if active == 0 {
        return Err(Error::AllExpertsEmpty { layer });
    }
    Ok(sum / active as f64)
}

/// Mean absolute deviation of each expert's per-modality token share from the
/// uniform share 1/E, averaged over both modalities.
pub fn uniform_deviation_specialization(table: &AssignmentTable, layer: usize) -> Result<f64> {
    if layer >= table.num_layers() {
        return Err(Error::LayerNotFound {
            layer,
            num_layers: table.num_layers(),
        });
    }
    let e = table.num_experts();
    let mut text = vec![0u64; e];
    let mut image = vec![0u64; e];
    for expert in 0..e {
        let cell = table.cell(layer, expert)?;
        text[expert] = cell.text_tokens;
        image[expert] = cell.image_tokens;
    }
    let text_total: u64 = text.iter().sum();
    let image_total: u64 = image.iter().sum();
    if text_total == 0 || image_total == 0 {
        return Err(Error::AllExpertsEmpty { layer });
    }
    let uniform = 1.0 / e as f64;
    let mut dev = 0.0;
    for expert in 0..e {
        dev += (text[expert] as f64 / text_total as f64 - uniform).abs();
        dev += (image[expert] as f64 / image_total as f64 - uniform).abs();
    }
    Ok(dev / (2.0 * e as f64))
}
