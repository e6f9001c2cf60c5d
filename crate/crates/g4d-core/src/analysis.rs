//! Redundancy-study metrics: temporal variance histogram, per-frame active
//! ratio and activation IoU.
//!
//! "Active" uses the same blending-weight-threshold definition as the mask
//! build, so these figures and the temporal filter are mutually consistent.

use alloc::vec;
use alloc::vec::Vec;

use crate::bitmask::Bitmask;
use crate::camera::Camera;
use crate::error::CoreError;
use crate::gaussian::Scene4D;
use crate::scoring::{render_pairs, ScoringOptions};
use crate::Result;

/// Bin the per-Gaussian temporal variances.
///
/// With `m` edges the result has `m + 1` counts: an open-ended bin below the
/// first edge, half-open `[e_i, e_{i+1})` bins, and an open-ended bin from
/// the last edge up. Counts always sum to the Gaussian count.
pub fn sigma_t_histogram(scene: &Scene4D, bin_edges: &[f64]) -> Result<Vec<usize>> {
    if bin_edges.is_empty() {
        return Err(CoreError::Parameter { reason: "histogram needs at least one bin edge" });
    }
    if bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CoreError::Parameter { reason: "bin edges must be strictly increasing" });
    }
    let mut counts = vec![0usize; bin_edges.len() + 1];
    for g in &scene.gaussians {
        let sigma_t = g.sigma_t();
        let bin = bin_edges.partition_point(|&e| e <= sigma_t);
        counts[bin] += 1;
    }
    Ok(counts)
}

/// Per-timestamp active bitmasks: a Gaussian is active at `t` when its
/// accumulated blending weight from at least one view exceeds `threshold`.
pub fn active_masks(
    scene: &Scene4D,
    cameras: &[Camera],
    timestamps: &[f64],
    threshold: f64,
    opts: &ScoringOptions,
) -> Result<Vec<Bitmask>> {
    if scene.is_empty() {
        return Err(CoreError::Parameter { reason: "activity metrics need a nonempty scene" });
    }
    if cameras.is_empty() || timestamps.is_empty() {
        return Err(CoreError::Parameter { reason: "activity metrics need cameras and timestamps" });
    }
    let pairs: Vec<(usize, usize)> = (0..timestamps.len())
        .flat_map(|k| (0..cameras.len()).map(move |c| (k, c)))
        .collect();
    let records = render_pairs(scene, cameras, timestamps, &pairs, opts)?;
    let mut masks: Vec<Bitmask> = timestamps.iter().map(|_| Bitmask::zeros(scene.len())).collect();
    for ((k, _c), weights) in pairs.iter().zip(records.iter()) {
        let mask = &mut masks[*k];
        for (g, &w) in weights.iter().enumerate() {
            if w > threshold {
                mask.set(g, true);
            }
        }
    }
    Ok(masks)
}

/// Fraction of Gaussians active at each timestamp, in [0, 1].
pub fn active_ratio(
    scene: &Scene4D,
    cameras: &[Camera],
    timestamps: &[f64],
    threshold: f64,
    opts: &ScoringOptions,
) -> Result<Vec<f64>> {
    let masks = active_masks(scene, cameras, timestamps, threshold, opts)?;
    let n = scene.len() as f64;
    Ok(masks.iter().map(|m| m.popcount() as f64 / n).collect())
}

/// IoU between the active set at `ref_t` and at each timestamp.
///
/// Two empty sets count as fully overlapping (IoU 1).
pub fn activation_iou(
    scene: &Scene4D,
    cameras: &[Camera],
    ref_t: f64,
    timestamps: &[f64],
    threshold: f64,
    opts: &ScoringOptions,
) -> Result<Vec<f64>> {
    let ref_mask = active_masks(scene, cameras, &[ref_t], threshold, opts)?.remove(0);
    let masks = active_masks(scene, cameras, timestamps, threshold, opts)?;
    Ok(masks
        .iter()
        .map(|m| {
            let union = ref_mask.union_count(m);
            if union == 0 {
                1.0
            } else {
                ref_mask.intersection_count(m) as f64 / union as f64
            }
        })
        .collect())
}
