//! Flat `key = value` pipeline configuration.
//!
//! One file drives every subcommand. Lines are `key = value` with `#`
//! comments; unknown keys are rejected with the offending key named, so a
//! typo cannot silently fall back to a default. All randomness flows from
//! the single `seed` through named sub-streams.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use g4d_core::scoring::CombineMode;
use g4d_core::SceneSpec;
use sha2::{Digest, Sha256};

use crate::error::ToolsError;
use crate::Result;

/// Which timestamps/views a stage runs over.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    All,
    Indices(Vec<usize>),
}

impl Selection {
    pub fn resolve(&self, count: usize, what: &str) -> Result<Vec<usize>> {
        match self {
            Selection::All => Ok((0..count).collect()),
            Selection::Indices(idx) => {
                for &i in idx {
                    if i >= count {
                        return Err(ToolsError::Config(format!(
                            "{what} index {i} out of range 0..{count}"
                        )));
                    }
                }
                Ok(idx.clone())
            }
        }
    }

    fn to_value(&self) -> String {
        match self {
            Selection::All => "all".into(),
            Selection::Indices(idx) => {
                idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
            }
        }
    }
}

/// Everything the pipeline commands read.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    // Artifact paths.
    pub scene_path: PathBuf,
    pub pruned_path: PathBuf,
    pub quantized_path: PathBuf,
    pub masks_path: PathBuf,
    pub codebook_path: PathBuf,
    pub scores_path: PathBuf,
    pub frames_dir: PathBuf,
    pub reports_dir: PathBuf,
    // Pipeline parameters.
    pub prune_ratio: f64,
    pub keyframe_interval: usize,
    pub visibility_threshold: f64,
    /// 0 = auto: min(max(N/4, 1), 4096).
    pub vq_k: usize,
    pub tau_t: f64,
    /// 0 = use the available parallelism.
    pub threads: usize,
    pub seed: u64,
    pub render_view: usize,
    pub score_timestamps: Selection,
    pub score_views: Selection,
    pub score_combine: CombineMode,
    pub sigma_t_edges: Vec<f64>,
    // Scene generator / camera rig.
    pub scene: SceneSpec,
    // PLY import inputs.
    pub import_ply: Option<PathBuf>,
    pub import_map: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scene_path: "out/scene.g4d".into(),
            pruned_path: "out/pruned.g4d".into(),
            quantized_path: "out/quantized.g4d".into(),
            masks_path: "out/filter.g4dm".into(),
            codebook_path: "out/codebook.g4dc".into(),
            scores_path: "out/scene.scores".into(),
            frames_dir: "out/frames".into(),
            reports_dir: "out/reports".into(),
            prune_ratio: 0.8,
            keyframe_interval: 20,
            visibility_threshold: 0.0,
            vq_k: 0,
            tau_t: 0.05,
            threads: 0,
            seed: 7,
            render_view: 0,
            score_timestamps: Selection::All,
            score_views: Selection::All,
            score_combine: CombineMode::TimeAligned,
            sigma_t_edges: vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0],
            scene: SceneSpec::default(),
            import_ply: None,
            import_map: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| ToolsError::Config(format!("key {key}: cannot parse value {value:?}")))
}

fn parse_pair(key: &str, value: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(ToolsError::Config(format!("key {key}: expected `lo,hi`, got {value:?}")));
    }
    Ok((parse_value(key, parts[0])?, parse_value(key, parts[1])?))
}

fn parse_triple(key: &str, value: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ToolsError::Config(format!("key {key}: expected `x,y,z`, got {value:?}")));
    }
    Ok([
        parse_value(key, parts[0])?,
        parse_value(key, parts[1])?,
        parse_value(key, parts[2])?,
    ])
}

fn parse_selection(key: &str, value: &str) -> Result<Selection> {
    if value.trim() == "all" {
        return Ok(Selection::All);
    }
    let idx = value
        .split(',')
        .map(|w| parse_value::<usize>(key, w))
        .collect::<Result<Vec<_>>>()?;
    if idx.is_empty() {
        return Err(ToolsError::Config(format!("key {key}: empty selection")));
    }
    Ok(Selection::Indices(idx))
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: BTreeMap<String, String> = BTreeMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ToolsError::Config(format!(
                    "line {}: not a `key = value` pair: {raw:?}",
                    line_no + 1
                )));
            };
            let key = key.trim().to_string();
            if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ToolsError::Config(format!("duplicate key {key}")));
            }
        }

        let mut cfg = PipelineConfig::default();
        for (key, value) in &pairs {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ToolsError::io(path, e))?;
        Self::parse(&text)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "paths.scene" => self.scene_path = value.into(),
            "paths.pruned" => self.pruned_path = value.into(),
            "paths.quantized" => self.quantized_path = value.into(),
            "paths.masks" => self.masks_path = value.into(),
            "paths.codebook" => self.codebook_path = value.into(),
            "paths.scores" => self.scores_path = value.into(),
            "paths.frames_dir" => self.frames_dir = value.into(),
            "paths.reports_dir" => self.reports_dir = value.into(),
            "prune_ratio" => self.prune_ratio = parse_value(key, value)?,
            "keyframe_interval" => self.keyframe_interval = parse_value(key, value)?,
            "visibility_threshold" => self.visibility_threshold = parse_value(key, value)?,
            "vq_k" => self.vq_k = parse_value(key, value)?,
            "tau_t" => self.tau_t = parse_value(key, value)?,
            "threads" => self.threads = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "render.view" => self.render_view = parse_value(key, value)?,
            "score.timestamps" => self.score_timestamps = parse_selection(key, value)?,
            "score.views" => self.score_views = parse_selection(key, value)?,
            "score.combine" => {
                self.score_combine = match value {
                    "time_aligned" => CombineMode::TimeAligned,
                    "product_of_sums" => CombineMode::ProductOfSums,
                    other => {
                        return Err(ToolsError::Config(format!(
                            "key {key}: unknown mode {other:?}"
                        )))
                    }
                }
            }
            "analyze.sigma_t_edges" => {
                self.sigma_t_edges = value
                    .split(',')
                    .map(|w| parse_value::<f64>(key, w))
                    .collect::<Result<Vec<_>>>()?;
            }
            "scene.n_static" => self.scene.n_static = parse_value(key, value)?,
            "scene.n_moving" => self.scene.n_moving = parse_value(key, value)?,
            "scene.n_flicker" => self.scene.n_flicker = parse_value(key, value)?,
            "scene.frame_count" => self.scene.frame_count = parse_value(key, value)?,
            "scene.t_min" => self.scene.time_extent.0 = parse_value(key, value)?,
            "scene.t_max" => self.scene.time_extent.1 = parse_value(key, value)?,
            "scene.box_min" => self.scene.box_min = parse_triple(key, value)?,
            "scene.box_max" => self.scene.box_max = parse_triple(key, value)?,
            "scene.sigma_t_static" => self.scene.sigma_t_static = parse_pair(key, value)?,
            "scene.sigma_t_moving" => self.scene.sigma_t_moving = parse_pair(key, value)?,
            "scene.sigma_t_flicker" => self.scene.sigma_t_flicker = parse_pair(key, value)?,
            "scene.spatial_sigma" => self.scene.spatial_sigma = parse_pair(key, value)?,
            "scene.velocity" => self.scene.velocity = parse_pair(key, value)?,
            "scene.sh_degree" => self.scene.sh_degree = parse_value(key, value)?,
            "scene.cameras" => self.scene.cameras = parse_value(key, value)?,
            "scene.camera_radius" => self.scene.camera_radius = parse_value(key, value)?,
            "scene.camera_height" => self.scene.camera_height = parse_value(key, value)?,
            "scene.image_width" => self.scene.image_size.0 = parse_value(key, value)?,
            "scene.image_height" => self.scene.image_size.1 = parse_value(key, value)?,
            "scene.fov_deg" => self.scene.fov_deg = parse_value(key, value)?,
            "import.ply" => self.import_ply = Some(value.into()),
            "import.map" => self.import_map = Some(value.into()),
            _ => return Err(ToolsError::Config(format!("unknown config key {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.prune_ratio) {
            return Err(ToolsError::Config("prune_ratio must lie in [0, 1)".into()));
        }
        if self.keyframe_interval < 1 {
            return Err(ToolsError::Config("keyframe_interval must be at least 1".into()));
        }
        if self.visibility_threshold < 0.0 {
            return Err(ToolsError::Config("visibility_threshold must be >= 0".into()));
        }
        if self.sigma_t_edges.is_empty()
            || self.sigma_t_edges.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(ToolsError::Config(
                "analyze.sigma_t_edges must be a strictly increasing list".into(),
            ));
        }
        for (name, p) in [
            ("paths.scene", &self.scene_path),
            ("paths.pruned", &self.pruned_path),
            ("paths.masks", &self.masks_path),
        ] {
            if p.as_os_str().is_empty() {
                return Err(ToolsError::Config(format!("{name} must not be empty")));
            }
        }
        Ok(())
    }

    /// Worker count for the render stages.
    pub fn effective_threads(&self) -> usize {
        if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }

    /// Effective K for SH quantization on an N-Gaussian scene.
    pub fn effective_vq_k(&self, n: usize) -> usize {
        let k = if self.vq_k > 0 { self.vq_k } else { (n / 4).clamp(1, 4096) };
        k.min(n).max(1)
    }

    /// Named sub-stream seeds derived from the config seed.
    pub fn derived_seed(&self, label: &str) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 is long enough"))
    }

    /// Canonical `key = value` rendering; its hash identifies the config in
    /// manifests regardless of comments or key order in the source file.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("analyze.sigma_t_edges", join_f64(&self.sigma_t_edges));
        if let Some(p) = &self.import_map {
            put("import.map", p.display().to_string());
        }
        if let Some(p) = &self.import_ply {
            put("import.ply", p.display().to_string());
        }
        put("keyframe_interval", self.keyframe_interval.to_string());
        put("paths.codebook", self.codebook_path.display().to_string());
        put("paths.frames_dir", self.frames_dir.display().to_string());
        put("paths.masks", self.masks_path.display().to_string());
        put("paths.pruned", self.pruned_path.display().to_string());
        put("paths.quantized", self.quantized_path.display().to_string());
        put("paths.reports_dir", self.reports_dir.display().to_string());
        put("paths.scene", self.scene_path.display().to_string());
        put("paths.scores", self.scores_path.display().to_string());
        put("prune_ratio", self.prune_ratio.to_string());
        put("render.view", self.render_view.to_string());
        put(
            "scene.box_max",
            join_f64(&self.scene.box_max),
        );
        put(
            "scene.box_min",
            join_f64(&self.scene.box_min),
        );
        put("scene.camera_height", self.scene.camera_height.to_string());
        put("scene.camera_radius", self.scene.camera_radius.to_string());
        put("scene.cameras", self.scene.cameras.to_string());
        put("scene.fov_deg", self.scene.fov_deg.to_string());
        put("scene.frame_count", self.scene.frame_count.to_string());
        put("scene.image_height", self.scene.image_size.1.to_string());
        put("scene.image_width", self.scene.image_size.0.to_string());
        put("scene.n_flicker", self.scene.n_flicker.to_string());
        put("scene.n_moving", self.scene.n_moving.to_string());
        put("scene.n_static", self.scene.n_static.to_string());
        put("scene.sh_degree", self.scene.sh_degree.to_string());
        put("scene.sigma_t_flicker", pair_str(self.scene.sigma_t_flicker));
        put("scene.sigma_t_moving", pair_str(self.scene.sigma_t_moving));
        put("scene.sigma_t_static", pair_str(self.scene.sigma_t_static));
        put("scene.spatial_sigma", pair_str(self.scene.spatial_sigma));
        put("scene.t_max", self.scene.time_extent.1.to_string());
        put("scene.t_min", self.scene.time_extent.0.to_string());
        put("scene.velocity", pair_str(self.scene.velocity));
        put(
            "score.combine",
            match self.score_combine {
                CombineMode::TimeAligned => "time_aligned".into(),
                CombineMode::ProductOfSums => "product_of_sums".into(),
            },
        );
        put("score.timestamps", self.score_timestamps.to_value());
        put("score.views", self.score_views.to_value());
        put("seed", self.seed.to_string());
        put("tau_t", self.tau_t.to_string());
        put("threads", self.threads.to_string());
        put("visibility_threshold", self.visibility_threshold.to_string());
        put("vq_k", self.vq_k.to_string());
        s
    }

    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_string().as_bytes());
        hex_digest(&hasher.finalize())
    }
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn pair_str(p: (f64, f64)) -> String {
    format!("{},{}", p.0, p.1)
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
