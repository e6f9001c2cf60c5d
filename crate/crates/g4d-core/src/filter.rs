//! Key-frame temporal filtering of inactive Gaussians.
//!
//! Sparse key-frames are selected at even frame intervals; for each key-frame
//! a visibility bitmask is built as the union over all training views of the
//! Gaussians with positive blending weight. Rendering at an arbitrary time
//! activates only the union of the two nearest key-frame masks, skipping the
//! conditioning and projection work for everything else.

use alloc::vec::Vec;

use crate::bitmask::Bitmask;
use crate::camera::Camera;
use crate::error::CoreError;
use crate::gaussian::Scene4D;
use crate::raster::{rasterize, RasterOptions, RenderOutput, DEFAULT_TAU_T};
use crate::scoring::{render_pairs, ScoringOptions};
use crate::Result;

/// Key-frame timestamps plus one visibility mask per key-frame.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeMaskSet {
    /// Strictly increasing key-frame timestamps.
    pub keyframe_times: Vec<f64>,
    /// One mask of length `n_gaussians` per key-frame.
    pub masks: Vec<Bitmask>,
    pub n_gaussians: usize,
    /// Blending-weight threshold used at build time.
    pub visibility_threshold: f64,
}

/// Options for mask construction renders.
#[derive(Debug, Clone)]
pub struct MaskBuildOptions {
    pub tau_t: f64,
    pub threads: usize,
}

impl Default for MaskBuildOptions {
    fn default() -> Self {
        MaskBuildOptions { tau_t: DEFAULT_TAU_T, threads: 1 }
    }
}

/// Key-frame timestamps for frame indices `0, dt, 2dt, ...` with the final
/// frame appended when the stride misses it.
///
/// Frame indices map to timestamps linearly over the time extent.
pub fn select_keyframes(
    time_extent: (f64, f64),
    frame_count: usize,
    interval_frames: usize,
) -> Result<Vec<f64>> {
    if frame_count == 0 {
        return Err(CoreError::Parameter { reason: "frame count must be at least 1" });
    }
    if interval_frames < 1 || interval_frames > frame_count {
        return Err(CoreError::Parameter { reason: "keyframe interval must lie in 1..=frame_count" });
    }
    let mut indices: Vec<usize> = (0..frame_count).step_by(interval_frames).collect();
    let last = frame_count - 1;
    if *indices.last().expect("nonempty") != last {
        indices.push(last);
    }
    let (t0, t1) = time_extent;
    let times = indices
        .into_iter()
        .map(|idx| {
            if frame_count == 1 {
                t0
            } else {
                t0 + (t1 - t0) * idx as f64 / (frame_count - 1) as f64
            }
        })
        .collect();
    Ok(times)
}

/// Build one visibility mask per key-frame as the union over training views.
///
/// A Gaussian is marked visible at a key-frame when its accumulated blending
/// weight from at least one view exceeds `threshold`.
pub fn build_masks(
    scene: &Scene4D,
    training_cameras: &[Camera],
    keyframe_times: &[f64],
    threshold: f64,
    opts: &MaskBuildOptions,
) -> Result<KeyframeMaskSet> {
    if training_cameras.is_empty() {
        return Err(CoreError::Parameter { reason: "mask building needs at least one camera" });
    }
    if keyframe_times.is_empty() {
        return Err(CoreError::Parameter { reason: "mask building needs at least one keyframe" });
    }
    if keyframe_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CoreError::Parameter { reason: "keyframe times must be strictly increasing" });
    }
    let n = scene.len();
    let pairs: Vec<(usize, usize)> = (0..keyframe_times.len())
        .flat_map(|k| (0..training_cameras.len()).map(move |c| (k, c)))
        .collect();
    let score_opts = ScoringOptions { tau_t: opts.tau_t, threads: opts.threads, ..Default::default() };
    let records = render_pairs(scene, training_cameras, keyframe_times, &pairs, &score_opts)?;

    let mut masks: Vec<Bitmask> = keyframe_times.iter().map(|_| Bitmask::zeros(n)).collect();
    for ((k, _c), weights) in pairs.iter().zip(records.iter()) {
        let mask = &mut masks[*k];
        for (g, &w) in weights.iter().enumerate() {
            if w > threshold {
                mask.set(g, true);
            }
        }
    }
    Ok(KeyframeMaskSet {
        keyframe_times: keyframe_times.to_vec(),
        masks,
        n_gaussians: n,
        visibility_threshold: threshold,
    })
}

impl KeyframeMaskSet {
    pub fn len(&self) -> usize {
        self.keyframe_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyframe_times.is_empty()
    }

    /// Union of the two nearest key-frame masks around `t`.
    ///
    /// Outside the key-frame range both neighbors resolve to the boundary
    /// key-frame; exactly on a key-frame the single mask is returned.
    pub fn active_set(&self, t: f64) -> Bitmask {
        assert!(!self.masks.is_empty(), "mask set is empty");
        // Number of keyframes strictly below t.
        let below = self.keyframe_times.partition_point(|&kt| kt < t);
        let right = below.min(self.keyframe_times.len() - 1);
        let left = if below == 0 {
            0
        } else if self.keyframe_times[right] > t || below == self.keyframe_times.len() {
            below - 1
        } else {
            right
        };
        if left == right {
            self.masks[left].clone()
        } else {
            self.masks[left].union(&self.masks[right])
        }
    }
}

/// Rasterize with the active mask for `t` taken from the mask set.
pub fn filtered_render(
    scene: &Scene4D,
    mask_set: &KeyframeMaskSet,
    cam: &Camera,
    t: f64,
    opts: &RasterOptions<'_>,
) -> Result<RenderOutput> {
    if mask_set.n_gaussians != scene.len() {
        return Err(CoreError::SceneMaskMismatch {
            scene: scene.len(),
            masks: mask_set.n_gaussians,
        });
    }
    let active = mask_set.active_set(t);
    let filtered_opts = RasterOptions { active_mask: Some(&active), ..opts.clone() };
    rasterize(scene, cam, t, &filtered_opts)
}
