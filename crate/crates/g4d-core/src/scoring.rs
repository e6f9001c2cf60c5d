//! Spatial-temporal variation scoring and score-ranked pruning.
//!
//! The spatial score of a Gaussian aggregates its blending weights over all
//! pixels of all training views at each sampled timestamp. The temporal
//! score maps the magnitude of the temporal opacity's second derivative
//! through `1 / (0.5 tanh|p''| + 0.5)` so persistent Gaussians land near 2
//! and flickering ones near 1, and is weighted by the normalized 4D volume.
//! The combined score sums the time-aligned products; low scores get pruned.

use alloc::vec;
use alloc::vec::Vec;

use crate::camera::Camera;
use crate::error::CoreError;
use crate::gaussian::Scene4D;
use crate::mathx::{ceil, exp, tanh};
use crate::raster::{rasterize, RasterOptions, DEFAULT_TAU_T};
use crate::Result;

/// How the per-timestamp factors fold into the final score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CombineMode {
    /// Sum over t of `temporal[i,t] * gamma[i] * spatial[i,t]`.
    #[default]
    TimeAligned,
    /// `(sum_t temporal[i,t]) * gamma[i] * (sum_t spatial[i,t])`; ablation hook.
    ProductOfSums,
}

/// Options for the scoring renders.
#[derive(Debug, Clone)]
pub struct ScoringOptions {
    /// Temporal cull threshold, matching the rendering default so
    /// "contribution" means rendered contribution.
    pub tau_t: f64,
    pub threads: usize,
    pub combine: CombineMode,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        ScoringOptions { tau_t: DEFAULT_TAU_T, threads: 1, combine: CombineMode::TimeAligned }
    }
}

/// Per-Gaussian score arrays aligned with the scene index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    /// Sampled timestamps, length T.
    pub timestamps: Vec<f64>,
    /// Row-major (Gaussian, timestamp) spatial scores, length N*T.
    pub spatial_per_t: Vec<f64>,
    /// Row-major (Gaussian, timestamp) temporal-variation values, length N*T.
    pub temporal_var_per_t: Vec<f64>,
    /// Normalized 4D volume per Gaussian, length N.
    pub gamma: Vec<f64>,
    /// Combined spatial-temporal variation score, length N.
    pub combined: Vec<f64>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn spatial_sum(&self, i: usize) -> f64 {
        let t = self.timestamps.len();
        self.spatial_per_t[i * t..(i + 1) * t].iter().sum()
    }

    pub fn temporal_sum(&self, i: usize) -> f64 {
        let t = self.timestamps.len();
        self.temporal_var_per_t[i * t..(i + 1) * t].iter().sum()
    }
}

/// Per-(Gaussian, timestamp) blending-weight totals over all views.
///
/// Renders every (timestamp, camera) pair with contribution recording and
/// accumulates the recorded weights in (timestamp, camera) order.
pub fn spatial_scores(
    scene: &Scene4D,
    cameras: &[Camera],
    timestamps: &[f64],
    opts: &ScoringOptions,
) -> Result<Vec<f64>> {
    if cameras.is_empty() {
        return Err(CoreError::Parameter { reason: "spatial scores need at least one camera" });
    }
    if timestamps.is_empty() {
        return Err(CoreError::Parameter { reason: "spatial scores need at least one timestamp" });
    }
    let n = scene.len();
    let t_count = timestamps.len();
    let pairs: Vec<(usize, usize)> = (0..t_count)
        .flat_map(|k| (0..cameras.len()).map(move |c| (k, c)))
        .collect();

    let records = render_pairs(scene, cameras, timestamps, &pairs, opts)?;

    let mut out = vec![0.0f64; n * t_count];
    for ((k, _c), weights) in pairs.iter().zip(records.iter()) {
        for i in 0..n {
            out[i * t_count + k] += weights[i];
        }
    }
    Ok(out)
}

/// Render the given (timestamp index, camera index) pairs with contribution
/// recording; results come back in pair order regardless of thread count.
pub(crate) fn render_pairs(
    scene: &Scene4D,
    cameras: &[Camera],
    timestamps: &[f64],
    pairs: &[(usize, usize)],
    opts: &ScoringOptions,
) -> Result<Vec<Vec<f64>>> {
    let render_one = |&(k, c): &(usize, usize)| -> Result<Vec<f64>> {
        let raster_opts = RasterOptions {
            record_contributions: true,
            tau_t: opts.tau_t,
            threads: 1,
            ..Default::default()
        };
        let out = rasterize(scene, &cameras[c], timestamps[k], &raster_opts)?;
        Ok(out.contributions.expect("recording requested").weights)
    };

    #[cfg(feature = "std")]
    {
        let workers = opts.threads.max(1).min(pairs.len().max(1));
        if workers > 1 {
            let render_ref = &render_one;
            let chunk = pairs.len().div_ceil(workers);
            let mut results: Vec<Option<Result<Vec<Vec<f64>>>>> = Vec::new();
            results.resize_with(workers, || None);
            std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for w in 0..workers {
                    let start = w * chunk;
                    let end = ((w + 1) * chunk).min(pairs.len());
                    let slice = &pairs[start..end];
                    handles.push(scope.spawn(move || {
                        slice.iter().map(render_ref).collect::<Result<Vec<Vec<f64>>>>()
                    }));
                }
                for (w, handle) in handles.into_iter().enumerate() {
                    results[w] = Some(handle.join().expect("scoring worker panicked"));
                }
            });
            let mut merged = Vec::with_capacity(pairs.len());
            for r in results {
                merged.extend(r.expect("worker result")?);
            }
            return Ok(merged);
        }
    }
    pairs.iter().map(render_one).collect()
}

/// Temporal-variation value for a known (mu_t, sigma_t) at time t.
#[inline]
pub(crate) fn temporal_variation_value(mu_t: f64, sigma_t: f64, t: f64) -> f64 {
    let dt = t - mu_t;
    let p = exp(-(dt * dt) / (2.0 * sigma_t));
    let d2 = (dt * dt / (sigma_t * sigma_t) - 1.0 / sigma_t) * p;
    1.0 / (0.5 * tanh(d2.abs()) + 0.5)
}

/// Per-(Gaussian, timestamp) temporal-variation values in (1, 2].
pub fn temporal_variation_scores(scene: &Scene4D, timestamps: &[f64]) -> Result<Vec<f64>> {
    if timestamps.is_empty() {
        return Err(CoreError::Parameter { reason: "temporal scores need at least one timestamp" });
    }
    let t_count = timestamps.len();
    let mut out = vec![0.0f64; scene.len() * t_count];
    for (i, g) in scene.gaussians.iter().enumerate() {
        let sigma_t = g.sigma_t();
        if sigma_t <= crate::gaussian::EPSILON_SIGMA_T {
            return Err(CoreError::DegenerateTimeVariance { sigma_t });
        }
        for (k, &t) in timestamps.iter().enumerate() {
            out[i * t_count + k] = temporal_variation_value(g.mean[3], sigma_t, t);
        }
    }
    Ok(out)
}

/// Normalized 4D volumes: `V_i = prod(scales)` clipped at the 90th-percentile
/// volume (nearest-rank percentile), so gamma lies in (0, 1].
pub fn volume_gamma(scene: &Scene4D) -> Result<Vec<f64>> {
    if scene.is_empty() {
        return Err(CoreError::Parameter { reason: "volume normalization needs a nonempty scene" });
    }
    let volumes: Vec<f64> = scene
        .gaussians
        .iter()
        .map(|g| g.scales[0] * g.scales[1] * g.scales[2] * g.scales[3])
        .collect();
    let mut sorted = volumes.clone();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let rank = ceil(0.9 * sorted.len() as f64) as usize;
    let v_p90 = sorted[rank.max(1) - 1];
    Ok(volumes.iter().map(|&v| (v / v_p90).min(1.0)).collect())
}

/// Fold the per-timestamp tables into the final per-Gaussian score.
pub fn combined_scores(
    spatial_per_t: &[f64],
    temporal_var_per_t: &[f64],
    gamma: &[f64],
    t_count: usize,
    mode: CombineMode,
) -> Result<Vec<f64>> {
    let n = gamma.len();
    if t_count == 0
        || spatial_per_t.len() != n * t_count
        || temporal_var_per_t.len() != n * t_count
    {
        return Err(CoreError::Alignment { reason: "score tables have mismatched shapes" });
    }
    let mut out = vec![0.0f64; n];
    match mode {
        CombineMode::TimeAligned => {
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..t_count {
                    acc += temporal_var_per_t[i * t_count + k] * gamma[i]
                        * spatial_per_t[i * t_count + k];
                }
                out[i] = acc;
            }
        }
        CombineMode::ProductOfSums => {
            for i in 0..n {
                let tv: f64 = temporal_var_per_t[i * t_count..(i + 1) * t_count].iter().sum();
                let sp: f64 = spatial_per_t[i * t_count..(i + 1) * t_count].iter().sum();
                out[i] = tv * gamma[i] * sp;
            }
        }
    }
    Ok(out)
}

/// Build the full score table for a scene.
pub fn score_table(
    scene: &Scene4D,
    cameras: &[Camera],
    timestamps: &[f64],
    opts: &ScoringOptions,
) -> Result<ScoreTable> {
    let spatial = spatial_scores(scene, cameras, timestamps, opts)?;
    let temporal = temporal_variation_scores(scene, timestamps)?;
    let gamma = volume_gamma(scene)?;
    let combined = combined_scores(&spatial, &temporal, &gamma, timestamps.len(), opts.combine)?;
    Ok(ScoreTable {
        timestamps: timestamps.to_vec(),
        spatial_per_t: spatial,
        temporal_var_per_t: temporal,
        gamma,
        combined,
    })
}

/// Keep the `ceil(N * (1 - ratio))` highest-scoring Gaussians.
///
/// Ties keep the lower index. The output preserves relative index order; the
/// returned list maps new indices to old ones.
pub fn prune(scene: &Scene4D, scores: &[f64], ratio: f64) -> Result<(Scene4D, Vec<usize>)> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(CoreError::Parameter { reason: "prune ratio must lie in [0, 1)" });
    }
    if scores.len() != scene.len() {
        return Err(CoreError::Alignment { reason: "scores not aligned with scene" });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CoreError::Parameter { reason: "scores must be finite" });
    }
    let n = scene.len();
    let keep = ceil(n as f64 * (1.0 - ratio)) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    let gaussians = kept.iter().map(|&i| scene.gaussians[i].clone()).collect();
    let pruned = Scene4D {
        gaussians,
        sh_degree: scene.sh_degree,
        time_extent: scene.time_extent,
        frame_count: scene.frame_count,
    };
    Ok((pruned, kept))
}
