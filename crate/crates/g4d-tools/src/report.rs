//! Storage accounting for the post-processing stage.

use g4d_core::gaussian::Scene4D;
use g4d_core::{Codebook, KeyframeMaskSet};

use crate::formats::{codebook, masks, scene};

/// Byte counts of every stage artifact plus the overall compression ratio.
///
/// `total_pp_bytes` is what a consumer must store after post-processing: the
/// SH-by-reference scene, the packed filter masks and the codebook. Without
/// VQ the pruned scene stands in for the quantized one; absent stages count
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageReport {
    pub raw_bytes: u64,
    pub pruned_bytes: u64,
    pub masks_bytes: u64,
    pub codebook_bytes: u64,
    pub quantized_scene_bytes: u64,
    pub total_pp_bytes: u64,
    pub compression_ratio: f64,
}

/// Compute the report from the serialization formats exactly.
pub fn storage_report(
    scene_before: &Scene4D,
    scene_after: &Scene4D,
    mask_set: Option<&KeyframeMaskSet>,
    codebook_ref: Option<&Codebook>,
) -> StorageReport {
    let raw_bytes = scene::plain_size(scene_before.len(), scene_before.sh_degree) as u64;
    let pruned_bytes = scene::plain_size(scene_after.len(), scene_after.sh_degree) as u64;
    let masks_bytes = mask_set
        .map(|m| masks::packed_size(m.n_gaussians, m.keyframe_times.len()) as u64)
        .unwrap_or(0);
    let (codebook_bytes, quantized_scene_bytes) = match codebook_ref {
        Some(cb) => (
            codebook::codebook_size(cb.k, cb.dim, cb.assignments.len()) as u64,
            scene::quantized_size(scene_after.len()) as u64,
        ),
        None => (0, 0),
    };
    let scene_term = if codebook_ref.is_some() { quantized_scene_bytes } else { pruned_bytes };
    let total_pp_bytes = scene_term + masks_bytes + codebook_bytes;
    StorageReport {
        raw_bytes,
        pruned_bytes,
        masks_bytes,
        codebook_bytes,
        quantized_scene_bytes,
        total_pp_bytes,
        compression_ratio: raw_bytes as f64 / total_pp_bytes as f64,
    }
}

impl StorageReport {
    /// Plain-text rendering written to the reports directory.
    pub fn to_text(&self) -> String {
        format!(
            "raw_bytes = {}\npruned_bytes = {}\nmasks_bytes = {}\ncodebook_bytes = {}\n\
             quantized_scene_bytes = {}\ntotal_pp_bytes = {}\ncompression_ratio = {}\n",
            self.raw_bytes,
            self.pruned_bytes,
            self.masks_bytes,
            self.codebook_bytes,
            self.quantized_scene_bytes,
            self.total_pp_bytes,
            self.compression_ratio,
        )
    }
}
