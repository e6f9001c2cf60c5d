//! Deterministic CPU rasterizer for time-conditioned Gaussian scenes.
//!
//! Gaussians are conditioned at the frame timestamp, projected to 2D splats
//! (EWA-style perspective Jacobian), binned into 16x16 pixel tiles by the
//! 3-sigma bound of the screen ellipse, and alpha-blended strictly front to
//! back in (depth, index) order. Accumulation happens in f64 per pixel and is
//! stored to f32 at the end, which makes the tiled path bit-identical to the
//! per-pixel brute-force path in [`reference_render`] for any tile layout and
//! worker count.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::bitmask::Bitmask;
use crate::camera::Camera;
use crate::error::CoreError;
use crate::gaussian::{condition_with_cov, ConditionalGaussian3D, Scene4D};
use crate::mathx::{exp, floor, sqrt};
use crate::sh::evaluate_sh;
use crate::Result;

/// Minimum alpha blended into a pixel.
pub const ALPHA_CUTOFF: f64 = 1.0 / 255.0;
/// Upper clamp on per-splat alpha.
pub const ALPHA_CLAMP: f64 = 0.99;
/// Front-to-back blending stops below this transmittance.
pub const TRANSMITTANCE_STOP: f64 = 1e-4;
/// Tile edge in pixels.
pub const TILE_SIZE: u32 = 16;
/// Low-pass dilation added to the projected covariance diagonal.
pub const COV2_DILATION: f64 = 0.3;
/// Splats at or behind this camera-space depth are culled.
pub const Z_NEAR: f64 = 0.01;
/// Default temporal-opacity cull threshold.
pub const DEFAULT_TAU_T: f64 = 0.05;
/// Screen-space ellipse bound in standard deviations.
pub const SIGMA_BOUND: f64 = 3.0;
/// 2D covariances with a determinant below this are skipped.
pub const SINGULAR_DET: f64 = 1e-12;

/// One projected Gaussian ready for blending.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat2D {
    /// Pixel coordinates of the projected mean.
    pub mean2: Vector2<f64>,
    /// Dilated screen-space covariance.
    pub cov2: Matrix2<f64>,
    /// Camera-space z of the mean, always > [`Z_NEAR`].
    pub depth: f64,
    /// SH color towards the camera, clamped to [0, 1].
    pub rgb: [f64; 3],
    /// Opacity times temporal weight.
    pub alpha_base: f64,
}

/// Rendered image plus the per-pixel final transmittance.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderFrame {
    pub width: u32,
    pub height: u32,
    /// Interleaved RGB, row-major, length `width * height * 3`.
    pub rgb: Vec<f32>,
    /// Final per-pixel transmittance, row-major.
    pub transmittance: Vec<f32>,
}

impl RenderFrame {
    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }
}

/// Per-Gaussian blending weight totals accumulated during a render.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionRecord {
    /// Sum over pixels of `alpha_i * prod_{j<i} (1 - alpha_j)`.
    pub weights: Vec<f64>,
    /// Set when the Gaussian was blended into at least one pixel.
    pub hits: Vec<bool>,
}

impl ContributionRecord {
    fn new(n: usize) -> Self {
        ContributionRecord { weights: vec![0.0; n], hits: vec![false; n] }
    }
}

/// Blending constants in force during a render, reported read-only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConstants {
    pub alpha_cutoff: f64,
    pub alpha_clamp: f64,
    pub transmittance_stop: f64,
    pub tile_size: u32,
    pub cov2_dilation: f64,
    pub z_near: f64,
    pub sigma_bound: f64,
    pub tau_t: f64,
}

/// Counters describing one render.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderStats {
    /// Gaussians that reached conditioning and projection.
    pub processed: usize,
    /// Skipped because the active mask cleared them.
    pub culled_by_mask: usize,
    /// Skipped because temporal opacity fell below tau_t.
    pub culled_temporal: usize,
    /// Projected behind the near plane.
    pub culled_depth: usize,
    /// Projected outside the image bounds.
    pub culled_offscreen: usize,
    /// Skipped splats with a singular 2D covariance.
    pub singular_cov2_skipped: usize,
    /// Splats that entered tile binning / blending.
    pub blended_splats: usize,
    pub constants: RasterConstants,
}

/// Per-call rendering options.
#[derive(Debug, Clone)]
pub struct RasterOptions<'a> {
    /// Gaussians with a cleared bit are skipped entirely.
    pub active_mask: Option<&'a Bitmask>,
    pub record_contributions: bool,
    pub background: [f64; 3],
    /// Temporal opacity cull threshold.
    pub tau_t: f64,
    /// Worker count for tile rendering; results are identical for any value.
    pub threads: usize,
}

impl Default for RasterOptions<'_> {
    fn default() -> Self {
        RasterOptions {
            active_mask: None,
            record_contributions: false,
            background: [0.0, 0.0, 0.0],
            tau_t: DEFAULT_TAU_T,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub frame: RenderFrame,
    pub contributions: Option<ContributionRecord>,
    pub stats: RenderStats,
}

/// Project one conditioned Gaussian to a screen splat.
///
/// Returns `None` when the mean lies at or behind the near plane. `opacity`
/// is the learned per-Gaussian opacity; the temporal weight is taken from
/// `cg`.
pub fn project(
    cg: &ConditionalGaussian3D,
    opacity: f64,
    cam: &Camera,
    sh: &[[f64; 3]],
    sh_degree: usize,
) -> Result<Option<Splat2D>> {
    let p_cam = cam.to_camera(&cg.mean3);
    let depth = p_cam[2];
    if depth <= Z_NEAR {
        return Ok(None);
    }
    let inv_z = 1.0 / depth;
    let mean2 = Vector2::new(
        cam.fx * p_cam[0] * inv_z + cam.cx,
        cam.fy * p_cam[1] * inv_z + cam.cy,
    );

    let w = cam.rotation();
    let cov_cam: Matrix3<f64> = w * cg.cov3 * w.transpose();
    // Perspective Jacobian at the mean, rows du/d(xyz), dv/d(xyz).
    let j00 = cam.fx * inv_z;
    let j02 = -cam.fx * p_cam[0] * inv_z * inv_z;
    let j11 = cam.fy * inv_z;
    let j12 = -cam.fy * p_cam[1] * inv_z * inv_z;
    let a = j00 * (j00 * cov_cam[(0, 0)] + j02 * cov_cam[(2, 0)])
        + j02 * (j00 * cov_cam[(0, 2)] + j02 * cov_cam[(2, 2)]);
    let b = j11 * (j00 * cov_cam[(0, 1)] + j02 * cov_cam[(2, 1)])
        + j12 * (j00 * cov_cam[(0, 2)] + j02 * cov_cam[(2, 2)]);
    let c = j11 * (j11 * cov_cam[(1, 1)] + j12 * cov_cam[(2, 1)])
        + j12 * (j11 * cov_cam[(1, 2)] + j12 * cov_cam[(2, 2)]);
    let cov2 = Matrix2::new(a + COV2_DILATION, b, b, c + COV2_DILATION);

    let to_mean = cg.mean3 - cam.center();
    let norm = to_mean.norm();
    let dir = if norm > 0.0 { to_mean / norm } else { Vector3::new(0.0, 0.0, 1.0) };
    let raw = evaluate_sh(sh, sh_degree, &dir)?;
    let rgb = [raw[0].clamp(0.0, 1.0), raw[1].clamp(0.0, 1.0), raw[2].clamp(0.0, 1.0)];

    Ok(Some(Splat2D {
        mean2,
        cov2,
        depth,
        rgb,
        alpha_base: opacity * cg.temporal_weight,
    }))
}

/// Splat plus everything the blending loops need, precomputed once so the
/// tiled and brute-force paths share identical numbers.
#[derive(Debug, Clone)]
struct PreparedSplat {
    gauss_idx: u32,
    depth: f64,
    mean2: Vector2<f64>,
    /// Symmetric inverse of cov2: (m00, m01, m11).
    inv: (f64, f64, f64),
    rgb: [f64; 3],
    alpha_base: f64,
    /// Inclusive pixel bounds of the 3-sigma box; the blending rule.
    px_min: i32,
    px_max: i32,
    py_min: i32,
    py_max: i32,
}

fn prepare_splats(
    scene: &Scene4D,
    cam: &Camera,
    t: f64,
    opts: &RasterOptions<'_>,
) -> Result<(Vec<PreparedSplat>, RenderStats)> {
    cam.validate()?;
    if let Some(mask) = opts.active_mask {
        if mask.len() != scene.len() {
            return Err(CoreError::SceneMaskMismatch { scene: scene.len(), masks: mask.len() });
        }
    }
    let mut stats = RenderStats {
        processed: 0,
        culled_by_mask: 0,
        culled_temporal: 0,
        culled_depth: 0,
        culled_offscreen: 0,
        singular_cov2_skipped: 0,
        blended_splats: 0,
        constants: RasterConstants {
            alpha_cutoff: ALPHA_CUTOFF,
            alpha_clamp: ALPHA_CLAMP,
            transmittance_stop: TRANSMITTANCE_STOP,
            tile_size: TILE_SIZE,
            cov2_dilation: COV2_DILATION,
            z_near: Z_NEAR,
            sigma_bound: SIGMA_BOUND,
            tau_t: opts.tau_t,
        },
    };

    let width = cam.width as i32;
    let height = cam.height as i32;
    let mut out = Vec::new();
    for (i, g) in scene.gaussians.iter().enumerate() {
        if let Some(mask) = opts.active_mask {
            if !mask.get(i) {
                stats.culled_by_mask += 1;
                continue;
            }
        }
        let rot = g.q_l.left_matrix() * g.q_r.right_matrix();
        let mut sigma_t = 0.0;
        for k in 0..4 {
            let v = rot[(3, k)] * g.scales[k];
            sigma_t += v * v;
        }
        let p = crate::gaussian::temporal_opacity_with(g.mean[3], sigma_t, t)?;
        if p < opts.tau_t {
            stats.culled_temporal += 1;
            continue;
        }
        stats.processed += 1;

        let s2 = nalgebra::Vector4::new(
            g.scales[0] * g.scales[0],
            g.scales[1] * g.scales[1],
            g.scales[2] * g.scales[2],
            g.scales[3] * g.scales[3],
        );
        let rs = rot * nalgebra::Matrix4::from_diagonal(&s2);
        let cov4 = rs * rot.transpose();
        let cov4 = 0.5 * (cov4 + cov4.transpose());
        let cg = condition_with_cov(&cov4, &g.mean, t)?;
        let splat = match project(&cg, g.opacity, cam, &g.sh, scene.sh_degree)? {
            Some(s) => s,
            None => {
                stats.culled_depth += 1;
                continue;
            }
        };

        let det = splat.cov2[(0, 0)] * splat.cov2[(1, 1)] - splat.cov2[(0, 1)] * splat.cov2[(1, 0)];
        if det < SINGULAR_DET {
            stats.singular_cov2_skipped += 1;
            continue;
        }
        let inv = (
            splat.cov2[(1, 1)] / det,
            -splat.cov2[(0, 1)] / det,
            splat.cov2[(0, 0)] / det,
        );

        let hx = SIGMA_BOUND * sqrt(splat.cov2[(0, 0)]);
        let hy = SIGMA_BOUND * sqrt(splat.cov2[(1, 1)]);
        // Pixel p has center p + 0.5; keep pixels whose center falls in the box.
        let px_min = (floor(splat.mean2[0] - hx + 0.5) as i32).max(0);
        let px_max = (floor(splat.mean2[0] + hx - 0.5) as i32).min(width - 1);
        let py_min = (floor(splat.mean2[1] - hy + 0.5) as i32).max(0);
        let py_max = (floor(splat.mean2[1] + hy - 0.5) as i32).min(height - 1);
        if px_min > px_max || py_min > py_max {
            stats.culled_offscreen += 1;
            continue;
        }
        stats.blended_splats += 1;
        out.push(PreparedSplat {
            gauss_idx: i as u32,
            depth: splat.depth,
            mean2: splat.mean2,
            inv,
            rgb: splat.rgb,
            alpha_base: splat.alpha_base,
            px_min,
            px_max,
            py_min,
            py_max,
        });
    }

    // Strict front-to-back order: depth, ties by ascending Gaussian index.
    out.sort_unstable_by(|a, b| a.depth.total_cmp(&b.depth).then(a.gauss_idx.cmp(&b.gauss_idx)));
    Ok((out, stats))
}

/// Tiled front-to-back rasterization.
pub fn rasterize(
    scene: &Scene4D,
    cam: &Camera,
    t: f64,
    opts: &RasterOptions<'_>,
) -> Result<RenderOutput> {
    let (splats, mut stats) = prepare_splats(scene, cam, t, opts)?;
    let width = cam.width;
    let height = cam.height;
    let tiles_x = width.div_ceil(TILE_SIZE) as usize;
    let tiles_y = height.div_ceil(TILE_SIZE) as usize;
    let n_tiles = tiles_x * tiles_y;

    // Bin in sorted order so per-tile lists stay depth-sorted.
    let mut tile_lists: Vec<Vec<u32>> = vec![Vec::new(); n_tiles];
    for (si, s) in splats.iter().enumerate() {
        let tx0 = s.px_min as u32 / TILE_SIZE;
        let tx1 = s.px_max as u32 / TILE_SIZE;
        let ty0 = s.py_min as u32 / TILE_SIZE;
        let ty1 = s.py_max as u32 / TILE_SIZE;
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                tile_lists[ty as usize * tiles_x + tx as usize].push(si as u32);
            }
        }
    }

    let mut frame = RenderFrame {
        width,
        height,
        rgb: vec![0.0; (width * height * 3) as usize],
        transmittance: vec![0.0; (width * height) as usize],
    };
    let mut record = opts.record_contributions.then(|| ContributionRecord::new(scene.len()));

    let tile_outputs = render_tiles(
        &splats,
        &tile_lists,
        tiles_x,
        width,
        height,
        opts.background,
        opts.record_contributions,
        opts.threads.max(1),
    );

    // Deterministic merge in tile-index order.
    for (tile_idx, tile_out) in tile_outputs.into_iter().enumerate() {
        let tx = (tile_idx % tiles_x) as u32;
        let ty = (tile_idx / tiles_x) as u32;
        let x0 = tx * TILE_SIZE;
        let y0 = ty * TILE_SIZE;
        let x1 = (x0 + TILE_SIZE).min(width);
        let y1 = (y0 + TILE_SIZE).min(height);
        let tile_w = (x1 - x0) as usize;
        for (row, py) in (y0..y1).enumerate() {
            for (col, px) in (x0..x1).enumerate() {
                let local = row * tile_w + col;
                let idx = (py * width + px) as usize;
                frame.rgb[3 * idx] = tile_out.rgb[3 * local];
                frame.rgb[3 * idx + 1] = tile_out.rgb[3 * local + 1];
                frame.rgb[3 * idx + 2] = tile_out.rgb[3 * local + 2];
                frame.transmittance[idx] = tile_out.transmittance[local];
            }
        }
        if let Some(rec) = record.as_mut() {
            for (gauss_idx, weight) in tile_out.contributions {
                let gi = gauss_idx as usize;
                rec.weights[gi] += weight;
                if weight > 0.0 {
                    rec.hits[gi] = true;
                }
            }
        }
    }
    stats.constants.tau_t = opts.tau_t;
    Ok(RenderOutput { frame, contributions: record, stats })
}

struct TileOutput {
    rgb: Vec<f32>,
    transmittance: Vec<f32>,
    /// (gaussian index, accumulated weight) in tile-list order.
    contributions: Vec<(u32, f64)>,
}

#[allow(clippy::too_many_arguments)]
fn render_one_tile(
    splats: &[PreparedSplat],
    list: &[u32],
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    background: [f64; 3],
    record: bool,
) -> TileOutput {
    let tile_w = (x1 - x0) as usize;
    let tile_h = (y1 - y0) as usize;
    let mut rgb = vec![0.0f32; tile_w * tile_h * 3];
    let mut transmittance = vec![0.0f32; tile_w * tile_h];
    let mut weights = if record { vec![0.0f64; list.len()] } else { Vec::new() };

    for (row, py) in (y0..y1).enumerate() {
        let cy = py as f64 + 0.5;
        for (col, px) in (x0..x1).enumerate() {
            let cx = px as f64 + 0.5;
            let mut acc = [0.0f64; 3];
            let mut trans = 1.0f64;
            for (li, &si) in list.iter().enumerate() {
                let s = &splats[si as usize];
                let pxi = px as i32;
                let pyi = py as i32;
                if pxi < s.px_min || pxi > s.px_max || pyi < s.py_min || pyi > s.py_max {
                    continue;
                }
                let dx = cx - s.mean2[0];
                let dy = cy - s.mean2[1];
                let q = dx * (s.inv.0 * dx + s.inv.1 * dy) + dy * (s.inv.1 * dx + s.inv.2 * dy);
                let alpha = s.alpha_base * exp(-0.5 * q);
                if alpha < ALPHA_CUTOFF {
                    continue;
                }
                let alpha = if alpha > ALPHA_CLAMP { ALPHA_CLAMP } else { alpha };
                let w = alpha * trans;
                acc[0] += s.rgb[0] * w;
                acc[1] += s.rgb[1] * w;
                acc[2] += s.rgb[2] * w;
                if record {
                    weights[li] += w;
                }
                trans *= 1.0 - alpha;
                if trans < TRANSMITTANCE_STOP {
                    break;
                }
            }
            acc[0] += trans * background[0];
            acc[1] += trans * background[1];
            acc[2] += trans * background[2];
            let local = row * tile_w + col;
            rgb[3 * local] = acc[0] as f32;
            rgb[3 * local + 1] = acc[1] as f32;
            rgb[3 * local + 2] = acc[2] as f32;
            transmittance[local] = trans as f32;
        }
    }

    let contributions = if record {
        list.iter()
            .zip(weights)
            .map(|(&si, w)| (splats[si as usize].gauss_idx, w))
            .collect()
    } else {
        Vec::new()
    };
    TileOutput { rgb, transmittance, contributions }
}

#[allow(clippy::too_many_arguments)]
#[cfg(feature = "std")]
fn render_tiles(
    splats: &[PreparedSplat],
    tile_lists: &[Vec<u32>],
    tiles_x: usize,
    width: u32,
    height: u32,
    background: [f64; 3],
    record: bool,
    threads: usize,
) -> Vec<TileOutput> {
    let n_tiles = tile_lists.len();
    let workers = threads.min(n_tiles).max(1);
    if workers == 1 {
        return (0..n_tiles)
            .map(|tile_idx| {
                let (x0, y0, x1, y1) = tile_bounds(tile_idx, tiles_x, width, height);
                render_one_tile(splats, &tile_lists[tile_idx], x0, y0, x1, y1, background, record)
            })
            .collect();
    }
    let chunk = n_tiles.div_ceil(workers);
    let mut results: Vec<Option<Vec<TileOutput>>> = Vec::new();
    results.resize_with(workers, || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            let start = w * chunk;
            let end = ((w + 1) * chunk).min(n_tiles);
            handles.push(scope.spawn(move || {
                (start..end)
                    .map(|tile_idx| {
                        let (x0, y0, x1, y1) = tile_bounds(tile_idx, tiles_x, width, height);
                        render_one_tile(
                            splats,
                            &tile_lists[tile_idx],
                            x0,
                            y0,
                            x1,
                            y1,
                            background,
                            record,
                        )
                    })
                    .collect::<Vec<_>>()
            }));
        }
        for (w, handle) in handles.into_iter().enumerate() {
            results[w] = Some(handle.join().expect("tile worker panicked"));
        }
    });
    results.into_iter().flat_map(|r| r.expect("worker result")).collect()
}

#[allow(clippy::too_many_arguments)]
#[cfg(not(feature = "std"))]
fn render_tiles(
    splats: &[PreparedSplat],
    tile_lists: &[Vec<u32>],
    tiles_x: usize,
    width: u32,
    height: u32,
    background: [f64; 3],
    record: bool,
    _threads: usize,
) -> Vec<TileOutput> {
    (0..tile_lists.len())
        .map(|tile_idx| {
            let (x0, y0, x1, y1) = tile_bounds(tile_idx, tiles_x, width, height);
            render_one_tile(splats, &tile_lists[tile_idx], x0, y0, x1, y1, background, record)
        })
        .collect()
}

fn tile_bounds(tile_idx: usize, tiles_x: usize, width: u32, height: u32) -> (u32, u32, u32, u32) {
    let tx = (tile_idx % tiles_x) as u32;
    let ty = (tile_idx / tiles_x) as u32;
    let x0 = tx * TILE_SIZE;
    let y0 = ty * TILE_SIZE;
    (x0, y0, (x0 + TILE_SIZE).min(width), (y0 + TILE_SIZE).min(height))
}

/// Per-pixel brute-force renderer: every pixel walks the full depth-sorted
/// splat list with the same alpha rules and no tiling. The correctness oracle
/// for [`rasterize`].
pub fn reference_render(
    scene: &Scene4D,
    cam: &Camera,
    t: f64,
    opts: &RasterOptions<'_>,
) -> Result<RenderOutput> {
    let (splats, mut stats) = prepare_splats(scene, cam, t, opts)?;
    let width = cam.width;
    let height = cam.height;
    let mut frame = RenderFrame {
        width,
        height,
        rgb: vec![0.0; (width * height * 3) as usize],
        transmittance: vec![0.0; (width * height) as usize],
    };
    let mut record = opts.record_contributions.then(|| ContributionRecord::new(scene.len()));

    for py in 0..height {
        let cy = py as f64 + 0.5;
        for px in 0..width {
            let cx = px as f64 + 0.5;
            let mut acc = [0.0f64; 3];
            let mut trans = 1.0f64;
            for s in &splats {
                let pxi = px as i32;
                let pyi = py as i32;
                if pxi < s.px_min || pxi > s.px_max || pyi < s.py_min || pyi > s.py_max {
                    continue;
                }
                let dx = cx - s.mean2[0];
                let dy = cy - s.mean2[1];
                let q = dx * (s.inv.0 * dx + s.inv.1 * dy) + dy * (s.inv.1 * dx + s.inv.2 * dy);
                let alpha = s.alpha_base * exp(-0.5 * q);
                if alpha < ALPHA_CUTOFF {
                    continue;
                }
                let alpha = if alpha > ALPHA_CLAMP { ALPHA_CLAMP } else { alpha };
                let w = alpha * trans;
                acc[0] += s.rgb[0] * w;
                acc[1] += s.rgb[1] * w;
                acc[2] += s.rgb[2] * w;
                if let Some(rec) = record.as_mut() {
                    let gi = s.gauss_idx as usize;
                    rec.weights[gi] += w;
                    if w > 0.0 {
                        rec.hits[gi] = true;
                    }
                }
                trans *= 1.0 - alpha;
                if trans < TRANSMITTANCE_STOP {
                    break;
                }
            }
            acc[0] += trans * opts.background[0];
            acc[1] += trans * opts.background[1];
            acc[2] += trans * opts.background[2];
            let idx = (py * width + px) as usize;
            frame.rgb[3 * idx] = acc[0] as f32;
            frame.rgb[3 * idx + 1] = acc[1] as f32;
            frame.rgb[3 * idx + 2] = acc[2] as f32;
            frame.transmittance[idx] = trans as f32;
        }
    }
    stats.constants.tau_t = opts.tau_t;
    Ok(RenderOutput { frame, contributions: record, stats })
}
