//! Pipeline subcommands: each reads its inputs, writes its artifacts
//! atomically and finishes with a manifest of checksums.

use std::path::Path;
use std::time::Instant;

use g4d_core::analysis::{active_ratio, activation_iou, sigma_t_histogram};
use g4d_core::filter::{build_masks, filtered_render, select_keyframes, MaskBuildOptions};
use g4d_core::gaussian::Scene4D;
use g4d_core::metrics::psnr;
use g4d_core::raster::{rasterize, RasterOptions};
use g4d_core::scoring::{prune, score_table, ScoringOptions};
use g4d_core::synth::generate_scene;
use g4d_core::vq::quantize_sh;
use g4d_core::{Camera, RenderFrame};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::config::PipelineConfig;
use crate::error::ToolsError;
use crate::formats::{codebook, frame, masks, ply, scene, scores};
use crate::manifest::ManifestBuilder;
use crate::report::storage_report;
use crate::Result;

/// The pipeline stages exposed as CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Generate,
    Render,
    Score,
    Prune,
    BuildFilter,
    RenderFiltered,
    Compress,
    Analyze,
    Bench,
    Import,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Render => "render",
            Command::Score => "score",
            Command::Prune => "prune",
            Command::BuildFilter => "build-filter",
            Command::RenderFiltered => "render-filtered",
            Command::Compress => "compress",
            Command::Analyze => "analyze",
            Command::Bench => "bench",
            Command::Import => "import",
        }
    }
}

/// Run one subcommand against a parsed config.
pub fn run(command: Command, config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    match command {
        Command::Generate => cmd_generate(config),
        Command::Render => cmd_render(config),
        Command::Score => cmd_score(config),
        Command::Prune => cmd_prune(config),
        Command::BuildFilter => cmd_build_filter(config),
        Command::RenderFiltered => cmd_render_filtered(config),
        Command::Compress => cmd_compress(config),
        Command::Analyze => cmd_analyze(config),
        Command::Bench => cmd_bench(config),
        Command::Import => cmd_import(config),
    }
}

fn load_scene(path: &Path) -> Result<Scene4D> {
    scene::read_plain_scene(path)
}

fn rig(config: &PipelineConfig) -> Result<Vec<Camera>> {
    config.scene.camera_ring().map_err(ToolsError::from)
}

fn view_camera(config: &PipelineConfig, cameras: &[Camera]) -> Result<Camera> {
    cameras.get(config.render_view).cloned().ok_or_else(|| {
        ToolsError::Config(format!(
            "render.view {} out of range 0..{}",
            config.render_view,
            cameras.len()
        ))
    })
}

/// Key-frame times quantized through f32 so the mask file and in-memory
/// builds agree exactly.
fn keyframe_times_f32(scene: &Scene4D, interval: usize) -> Result<Vec<f64>> {
    let times = select_keyframes(scene.time_extent, scene.frame_count, interval)?;
    Ok(times.into_iter().map(|t| (t as f32) as f64).collect())
}

fn cmd_generate(config: &PipelineConfig) -> Result<()> {
    let mut spec = config.scene.clone();
    spec.seed = config.derived_seed("generator");
    let (generated, _cams) = generate_scene(&spec)?;
    let mut m = ManifestBuilder::new();
    m.write(&config.scene_path, &scene::encode_scene(&generated))?;
    m.finish(&config.reports_dir, Command::Generate.name(), &config.config_hash())?;
    println!(
        "generate: {} gaussians ({} static / {} moving / {} flicker) -> {}",
        generated.len(),
        spec.n_static,
        spec.n_moving,
        spec.n_flicker,
        config.scene_path.display()
    );
    Ok(())
}

fn render_frames(
    m: &mut ManifestBuilder,
    scene_data: &Scene4D,
    cam: &Camera,
    dir: &Path,
    mask_set: Option<&g4d_core::KeyframeMaskSet>,
    config: &PipelineConfig,
) -> Result<Vec<usize>> {
    let opts = RasterOptions {
        tau_t: config.tau_t,
        threads: config.effective_threads(),
        ..Default::default()
    };
    let mut processed = Vec::new();
    for (i, t) in scene_data.frame_timestamps().into_iter().enumerate() {
        let out = match mask_set {
            Some(set) => filtered_render(scene_data, set, cam, t, &opts)?,
            None => rasterize(scene_data, cam, t, &opts)?,
        };
        processed.push(out.stats.processed);
        m.write(&dir.join(format!("frame_{i:04}.ppm")), &frame::encode_ppm(&out.frame))?;
        m.write(&dir.join(format!("frame_{i:04}.frame")), &frame::encode_frame(&out.frame))?;
    }
    Ok(processed)
}

fn cmd_render(config: &PipelineConfig) -> Result<()> {
    let scene_data = load_scene(&config.scene_path)?;
    let cameras = rig(config)?;
    let cam = view_camera(config, &cameras)?;
    let dir = config.frames_dir.join("full");
    let mut m = ManifestBuilder::new();
    let _ = render_frames(&mut m, &scene_data, &cam, &dir, None, config)?;
    let n_frames = scene_data.frame_count;
    m.finish(&config.reports_dir, Command::Render.name(), &config.config_hash())?;
    println!(
        "render: {} frames from view {} -> {}",
        n_frames,
        config.render_view,
        dir.display()
    );
    Ok(())
}

fn cmd_score(config: &PipelineConfig) -> Result<()> {
    let scene_data = load_scene(&config.scene_path)?;
    let cameras = rig(config)?;
    let view_idx = config.score_views.resolve(cameras.len(), "score.views")?;
    let chosen_cams: Vec<Camera> = view_idx.iter().map(|&i| cameras[i].clone()).collect();
    let all_times = scene_data.frame_timestamps();
    let time_idx = config.score_timestamps.resolve(all_times.len(), "score.timestamps")?;
    let chosen_times: Vec<f64> = time_idx.iter().map(|&i| all_times[i]).collect();
    let opts = ScoringOptions {
        tau_t: config.tau_t,
        threads: config.effective_threads(),
        combine: config.score_combine,
    };
    let table = score_table(&scene_data, &chosen_cams, &chosen_times, &opts)?;
    let rows = scores::ScoreRows::from_table(&table);
    let mut m = ManifestBuilder::new();
    m.write(&config.scores_path, &scores::encode_scores(&rows))?;
    let csv_path = config.scores_path.with_extension("csv");
    m.write(&csv_path, scores::scores_csv(&rows).as_bytes())?;
    m.finish(&config.reports_dir, Command::Score.name(), &config.config_hash())?;
    println!(
        "score: {} gaussians over {} views x {} timestamps -> {}",
        scene_data.len(),
        chosen_cams.len(),
        chosen_times.len(),
        config.scores_path.display()
    );
    Ok(())
}

fn cmd_prune(config: &PipelineConfig) -> Result<()> {
    let scene_data = load_scene(&config.scene_path)?;
    let rows = scores::read_scores(&config.scores_path)?;
    if rows.rows.len() != scene_data.len() {
        return Err(ToolsError::Config(format!(
            "scores file covers {} gaussians, scene has {}",
            rows.rows.len(),
            scene_data.len()
        )));
    }
    let (pruned, kept) = prune(&scene_data, &rows.combined(), config.prune_ratio)?;
    let mut m = ManifestBuilder::new();
    m.write(&config.pruned_path, &scene::encode_scene(&pruned))?;
    let mut kept_csv = String::from("new_index,old_index\n");
    for (new_i, old_i) in kept.iter().enumerate() {
        kept_csv.push_str(&format!("{new_i},{old_i}\n"));
    }
    let kept_path = config.pruned_path.with_extension("kept.csv");
    m.write(&kept_path, kept_csv.as_bytes())?;
    m.finish(&config.reports_dir, Command::Prune.name(), &config.config_hash())?;
    println!(
        "prune: ratio {} keeps {} of {} -> {}",
        config.prune_ratio,
        pruned.len(),
        scene_data.len(),
        config.pruned_path.display()
    );
    Ok(())
}

fn cmd_build_filter(config: &PipelineConfig) -> Result<()> {
    let scene_data = load_scene(&config.pruned_path)?;
    let cameras = rig(config)?;
    if config.keyframe_interval > scene_data.frame_count {
        return Err(ToolsError::Config(format!(
            "keyframe_interval {} exceeds the scene's {} frames",
            config.keyframe_interval, scene_data.frame_count
        )));
    }
    let times = keyframe_times_f32(&scene_data, config.keyframe_interval)?;
    let opts = MaskBuildOptions { tau_t: config.tau_t, threads: config.effective_threads() };
    let set = build_masks(&scene_data, &cameras, &times, config.visibility_threshold, &opts)?;
    let mut m = ManifestBuilder::new();
    m.write(&config.masks_path, &masks::pack_masks(&set))?;
    m.finish(&config.reports_dir, Command::BuildFilter.name(), &config.config_hash())?;
    let mean_pop: f64 = set.masks.iter().map(|b| b.popcount() as f64).sum::<f64>()
        / set.masks.len() as f64;
    println!(
        "build-filter: {} keyframes over {} gaussians (mean active {:.1}) -> {}",
        set.keyframe_times.len(),
        set.n_gaussians,
        mean_pop,
        config.masks_path.display()
    );
    Ok(())
}

fn cmd_render_filtered(config: &PipelineConfig) -> Result<()> {
    let scene_data = load_scene(&config.pruned_path)?;
    let set = masks::read_masks(&config.masks_path)?;
    let cameras = rig(config)?;
    let cam = view_camera(config, &cameras)?;
    let dir = config.frames_dir.join("filtered");
    let mut m = ManifestBuilder::new();
    let processed = render_frames(&mut m, &scene_data, &cam, &dir, Some(&set), config)?;
    let mut stats_csv = String::from("frame,processed,active\n");
    for (i, p) in processed.iter().enumerate() {
        let t = scene_data.frame_timestamps()[i];
        stats_csv.push_str(&format!("{i},{p},{}\n", set.active_set(t).popcount()));
    }
    m.write(&config.reports_dir.join("filtered_stats.csv"), stats_csv.as_bytes())?;
    m.finish(&config.reports_dir, Command::RenderFiltered.name(), &config.config_hash())?;
    let total: usize = processed.iter().sum();
    println!(
        "render-filtered: {} frames, mean processed {:.1} of {} -> {}",
        scene_data.frame_count,
        total as f64 / processed.len().max(1) as f64,
        scene_data.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_compress(config: &PipelineConfig) -> Result<()> {
    let original = load_scene(&config.scene_path)?;
    let pruned = load_scene(&config.pruned_path)?;
    let mask_set = masks::read_masks(&config.masks_path)?;
    let k = config.effective_vq_k(pruned.len());
    let (quantized, cb) = quantize_sh(&pruned, k, config.derived_seed("kmeans"))?;
    let mut m = ManifestBuilder::new();
    m.write(&config.quantized_path, &scene::encode_quantized_scene(&quantized, &cb.assignments)?)?;
    m.write(&config.codebook_path, &codebook::encode_codebook(&cb))?;
    let report = storage_report(&original, &pruned, Some(&mask_set), Some(&cb));
    m.write(&config.reports_dir.join("storage.txt"), report.to_text().as_bytes())?;
    m.finish(&config.reports_dir, Command::Compress.name(), &config.config_hash())?;
    println!(
        "compress: K = {k}, {} -> {} bytes ({:.1}x)",
        report.raw_bytes, report.total_pp_bytes, report.compression_ratio
    );
    Ok(())
}

fn cmd_analyze(config: &PipelineConfig) -> Result<()> {
    let scene_data = load_scene(&config.scene_path)?;
    let cameras = rig(config)?;
    let times = scene_data.frame_timestamps();
    let opts = ScoringOptions {
        tau_t: config.tau_t,
        threads: config.effective_threads(),
        ..Default::default()
    };

    let counts = sigma_t_histogram(&scene_data, &config.sigma_t_edges)?;
    let mut hist_csv = String::from("bin_lo,bin_hi,count\n");
    for (i, &count) in counts.iter().enumerate() {
        let lo = if i == 0 {
            "-inf".to_string()
        } else {
            config.sigma_t_edges[i - 1].to_string()
        };
        let hi = if i == counts.len() - 1 {
            "inf".to_string()
        } else {
            config.sigma_t_edges[i].to_string()
        };
        hist_csv.push_str(&format!("{lo},{hi},{count}\n"));
    }

    let ratios = active_ratio(&scene_data, &cameras, &times, config.visibility_threshold, &opts)?;
    let mut ratio_csv = String::from("t,active_ratio\n");
    for (t, r) in times.iter().zip(ratios.iter()) {
        ratio_csv.push_str(&format!("{t},{r}\n"));
    }

    let ious =
        activation_iou(&scene_data, &cameras, times[0], &times, config.visibility_threshold, &opts)?;
    let mut iou_csv = String::from("t,iou\n");
    for (t, v) in times.iter().zip(ious.iter()) {
        iou_csv.push_str(&format!("{t},{v}\n"));
    }

    let mut m = ManifestBuilder::new();
    m.write(&config.reports_dir.join("sigma_t_hist.csv"), hist_csv.as_bytes())?;
    m.write(&config.reports_dir.join("active_ratio.csv"), ratio_csv.as_bytes())?;
    m.write(&config.reports_dir.join("activation_iou.csv"), iou_csv.as_bytes())?;
    m.finish(&config.reports_dir, Command::Analyze.name(), &config.config_hash())?;
    println!(
        "analyze: {} bins / {} timestamps -> {}",
        counts.len(),
        times.len(),
        config.reports_dir.display()
    );
    Ok(())
}

fn cmd_import(config: &PipelineConfig) -> Result<()> {
    let (Some(ply_path), Some(map_path)) = (&config.import_ply, &config.import_map) else {
        return Err(ToolsError::Config(
            "import needs both import.ply and import.map set".into(),
        ));
    };
    let imported = ply::import_ply_file(
        ply_path,
        map_path,
        config.scene.time_extent,
        config.scene.frame_count,
    )?;
    let mut m = ManifestBuilder::new();
    m.write(&config.scene_path, &scene::encode_scene(&imported))?;
    m.finish(&config.reports_dir, Command::Import.name(), &config.config_hash())?;
    println!(
        "import: {} gaussians (sh degree {}) -> {}",
        imported.len(),
        imported.sh_degree,
        config.scene_path.display()
    );
    Ok(())
}

/// Uniformly random kept-index list, for the pruning-quality baseline.
fn random_keep(n: usize, keep: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut kept: Vec<usize> = idx.into_iter().take(keep).collect();
    kept.sort_unstable();
    kept
}

fn subset_scene(scene_data: &Scene4D, kept: &[usize]) -> Scene4D {
    Scene4D {
        gaussians: kept.iter().map(|&i| scene_data.gaussians[i].clone()).collect(),
        sh_degree: scene_data.sh_degree,
        time_extent: scene_data.time_extent,
        frame_count: scene_data.frame_count,
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Timing and quality measurements. Reports wall times and speedups; never
/// asserts an absolute rate.
fn cmd_bench(config: &PipelineConfig) -> Result<()> {
    let original = load_scene(&config.scene_path)?;
    let pruned = load_scene(&config.pruned_path)?;
    let mask_set = masks::read_masks(&config.masks_path)?;
    let cameras = rig(config)?;
    let cam = view_camera(config, &cameras)?;
    let opts = RasterOptions {
        tau_t: config.tau_t,
        threads: config.effective_threads(),
        ..Default::default()
    };
    let times = pruned.frame_timestamps();

    let mut report = String::new();
    report.push_str("# bench report: wall times are informative only\n");

    // Filtered vs unfiltered rendering on the pruned scene.
    let mut unfiltered_ms = Vec::new();
    let mut filtered_ms = Vec::new();
    let mut processed_filtered = Vec::new();
    for &t in &times {
        let start = Instant::now();
        let full = rasterize(&pruned, &cam, t, &opts)?;
        unfiltered_ms.push(start.elapsed().as_secs_f64() * 1e3);
        let start = Instant::now();
        let filt = filtered_render(&pruned, &mask_set, &cam, t, &opts)?;
        filtered_ms.push(start.elapsed().as_secs_f64() * 1e3);
        processed_filtered.push(filt.stats.processed);
        let _ = full;
    }
    let med_unfiltered = median(&mut unfiltered_ms);
    let med_filtered = median(&mut filtered_ms);
    let mean_processed: f64 =
        processed_filtered.iter().map(|&p| p as f64).sum::<f64>() / times.len() as f64;
    report.push_str(&format!(
        "render_unfiltered_median_ms = {med_unfiltered:.3}\n\
         render_filtered_median_ms = {med_filtered:.3}\n\
         filter_speedup = {:.3}\n\
         mean_processed_gaussians = {mean_processed:.1}\n\
         gaussians_total = {}\n",
        med_unfiltered / med_filtered,
        pruned.len(),
    ));

    // Pruning-quality ordering at ratio 0.5: score-ranked vs random, median
    // over 5 seeds, PSNR against the full render.
    let rows = scores::read_scores(&config.scores_path)?;
    if rows.rows.len() == original.len() {
        let eval_times: Vec<f64> = [0.25, 0.5, 0.75]
            .iter()
            .map(|&f| {
                let (t0, t1) = original.time_extent;
                t0 + (t1 - t0) * f
            })
            .collect();
        let reference: Vec<RenderFrame> = eval_times
            .iter()
            .map(|&t| rasterize(&original, &cam, t, &opts).map(|o| o.frame))
            .collect::<g4d_core::Result<_>>()?;
        let quality = |candidate: &Scene4D| -> Result<f64> {
            let mut acc = 0.0;
            for (t, reference_frame) in eval_times.iter().zip(reference.iter()) {
                let out = rasterize(candidate, &cam, *t, &opts)?;
                acc += psnr(reference_frame, &out.frame)?;
            }
            Ok(acc / eval_times.len() as f64)
        };
        let (score_pruned, _) = prune(&original, &rows.combined(), 0.5)?;
        let score_psnr = quality(&score_pruned)?;
        let keep = score_pruned.len();
        let mut random_psnrs = Vec::new();
        for i in 0..5 {
            let kept = random_keep(original.len(), keep, config.derived_seed(&format!("bench-prune-{i}")));
            random_psnrs.push(quality(&subset_scene(&original, &kept))?);
        }
        let med_random = median(&mut random_psnrs);
        report.push_str(&format!(
            "prune_quality_ratio = 0.5\n\
             score_pruned_psnr_db = {score_psnr:.4}\n\
             random_pruned_psnr_db_median5 = {med_random:.4}\n\
             prune_quality_margin_db = {:.4}\n",
            score_psnr - med_random,
        ));
    } else {
        report.push_str("prune_quality = skipped (scores do not match the scene)\n");
    }

    let mut m = ManifestBuilder::new();
    m.write(&config.reports_dir.join("bench.txt"), report.as_bytes())?;
    m.finish(&config.reports_dir, Command::Bench.name(), &config.config_hash())?;
    print!("{report}");
    Ok(())
}
