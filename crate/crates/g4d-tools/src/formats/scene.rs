//! G4D1 scene container.
//!
//! Layout (little-endian): magic "G4D1", u32 version = 1, u32 count,
//! u8 sh_degree, u8 flags, u8[2] padding, f32 t_min, f32 t_max,
//! u32 frame_count, then per Gaussian in list order: mean (4xf32),
//! scales (4xf32), q_l (4xf32, wxyz), q_r (4xf32), opacity (f32),
//! sh ((degree+1)^2 x 3 x f32).
//!
//! Flag bit 0 marks SH-by-reference: the per-Gaussian SH block is omitted
//! and a u32 codebook-assignment array follows the records instead.

use std::path::Path;

use g4d_core::gaussian::{sh_coeff_count, Gaussian4D, Scene4D};
use g4d_core::nalgebra::Vector4;
use g4d_core::{Codebook, Quat};

use super::{push_f32, push_u32, read_file, write_atomic, ByteReader};
use crate::error::ToolsError;
use crate::Result;

pub const MAGIC: &[u8; 4] = b"G4D1";
pub const VERSION: u32 = 1;
pub const FLAG_SH_BY_REFERENCE: u8 = 1;

/// A scene as stored on disk: plain, or with SH blocks replaced by codebook
/// assignments.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedScene {
    Plain(Scene4D),
    Quantized {
        /// Geometry with zeroed SH placeholders of the right length.
        scene: Scene4D,
        assignments: Vec<u32>,
    },
}

impl LoadedScene {
    /// The scene itself when plain; resolves SH through the codebook when
    /// quantized.
    pub fn resolve(self, codebook: Option<&Codebook>) -> Result<Scene4D> {
        match self {
            LoadedScene::Plain(scene) => Ok(scene),
            LoadedScene::Quantized { mut scene, assignments } => {
                let cb = codebook.ok_or_else(|| {
                    ToolsError::Config(
                        "scene stores SH by reference; a codebook is required".into(),
                    )
                })?;
                let bands = sh_coeff_count(scene.sh_degree);
                if cb.dim != 3 * bands {
                    return Err(ToolsError::Config(format!(
                        "codebook dim {} does not match sh degree {}",
                        cb.dim, scene.sh_degree
                    )));
                }
                for (g, &a) in scene.gaussians.iter_mut().zip(assignments.iter()) {
                    if a as usize >= cb.k {
                        return Err(ToolsError::Config(format!(
                            "assignment {a} out of codebook range {}",
                            cb.k
                        )));
                    }
                    let entry = cb.entry(a as usize);
                    for (band, coeff) in g.sh.iter_mut().enumerate() {
                        coeff[0] = entry[3 * band];
                        coeff[1] = entry[3 * band + 1];
                        coeff[2] = entry[3 * band + 2];
                    }
                }
                Ok(scene)
            }
        }
    }

    pub fn gaussian_count(&self) -> usize {
        match self {
            LoadedScene::Plain(s) => s.len(),
            LoadedScene::Quantized { scene, .. } => scene.len(),
        }
    }
}

/// Encoded size of a plain scene file.
pub fn plain_size(count: usize, sh_degree: usize) -> usize {
    28 + count * 4 * (17 + 3 * sh_coeff_count(sh_degree))
}

/// Encoded size of an SH-by-reference scene file.
pub fn quantized_size(count: usize) -> usize {
    28 + count * 4 * 17 + count * 4
}

pub fn encode_scene(scene: &Scene4D) -> Vec<u8> {
    encode_inner(scene, None)
}

/// Encode with SH stored by reference; `assignments` must align with the
/// scene.
pub fn encode_quantized_scene(scene: &Scene4D, assignments: &[u32]) -> Result<Vec<u8>> {
    if assignments.len() != scene.len() {
        return Err(ToolsError::Config("assignment array does not match scene length".into()));
    }
    Ok(encode_inner(scene, Some(assignments)))
}

fn encode_inner(scene: &Scene4D, assignments: Option<&[u32]>) -> Vec<u8> {
    let quantized = assignments.is_some();
    let mut out = Vec::with_capacity(if quantized {
        quantized_size(scene.len())
    } else {
        plain_size(scene.len(), scene.sh_degree)
    });
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    push_u32(&mut out, scene.len() as u32);
    out.push(scene.sh_degree as u8);
    out.push(if quantized { FLAG_SH_BY_REFERENCE } else { 0 });
    out.extend_from_slice(&[0u8; 2]);
    push_f32(&mut out, scene.time_extent.0 as f32);
    push_f32(&mut out, scene.time_extent.1 as f32);
    push_u32(&mut out, scene.frame_count as u32);

    for g in &scene.gaussians {
        for k in 0..4 {
            push_f32(&mut out, g.mean[k] as f32);
        }
        for k in 0..4 {
            push_f32(&mut out, g.scales[k] as f32);
        }
        for q in [&g.q_l, &g.q_r] {
            push_f32(&mut out, q.w as f32);
            push_f32(&mut out, q.x as f32);
            push_f32(&mut out, q.y as f32);
            push_f32(&mut out, q.z as f32);
        }
        push_f32(&mut out, g.opacity as f32);
        if !quantized {
            for coeff in &g.sh {
                push_f32(&mut out, coeff[0] as f32);
                push_f32(&mut out, coeff[1] as f32);
                push_f32(&mut out, coeff[2] as f32);
            }
        }
    }
    if let Some(assignments) = assignments {
        for &a in assignments {
            push_u32(&mut out, a);
        }
    }
    out
}

pub fn decode_scene(bytes: &[u8]) -> Result<LoadedScene> {
    let mut r = ByteReader::new(bytes);
    r.magic(MAGIC)?;
    let version_at = r.pos();
    let version = r.u32_le("version")?;
    if version != VERSION {
        return Err(ToolsError::format(version_at, format!("unsupported version {version}")));
    }
    let count = r.u32_le("gaussian count")? as usize;
    let degree_at = r.pos();
    let sh_degree = r.u8("sh degree")? as usize;
    if sh_degree > 3 {
        return Err(ToolsError::format(degree_at, format!("sh degree {sh_degree} out of range")));
    }
    let flags = r.u8("flags")?;
    r.bytes(2, "padding")?;
    let extent_at = r.pos();
    let t_min = r.f32_le("t_min")? as f64;
    let t_max = r.f32_le("t_max")? as f64;
    if !(t_min < t_max) {
        return Err(ToolsError::format(extent_at, "time extent must satisfy t_min < t_max"));
    }
    let fc_at = r.pos();
    let frame_count = r.u32_le("frame count")? as usize;
    if frame_count == 0 {
        return Err(ToolsError::format(fc_at, "frame count must be at least 1"));
    }

    let quantized = flags & FLAG_SH_BY_REFERENCE != 0;
    let bands = sh_coeff_count(sh_degree);
    let mut gaussians = Vec::with_capacity(count);
    for _ in 0..count {
        let record_at = r.pos();
        let mut mean = [0.0f64; 4];
        for m in &mut mean {
            *m = r.f32_le("mean")? as f64;
        }
        let mut scales = [0.0f64; 4];
        for s in &mut scales {
            *s = r.f32_le("scale")? as f64;
        }
        let mut quats = [[0.0f64; 4]; 2];
        for q in &mut quats {
            for c in q.iter_mut() {
                *c = r.f32_le("rotor")? as f64;
            }
        }
        let opacity = r.f32_le("opacity")? as f64;
        let mut sh = vec![[0.0f64; 3]; bands];
        if !quantized {
            for coeff in &mut sh {
                for c in coeff.iter_mut() {
                    *c = r.f32_le("sh")? as f64;
                }
            }
        }
        let g = Gaussian4D::new(
            Vector4::new(mean[0], mean[1], mean[2], mean[3]),
            Vector4::new(scales[0], scales[1], scales[2], scales[3]),
            Quat::new(quats[0][0], quats[0][1], quats[0][2], quats[0][3]),
            Quat::new(quats[1][0], quats[1][1], quats[1][2], quats[1][3]),
            opacity,
            sh,
        )
        .map_err(|e| ToolsError::format(record_at, format!("invalid Gaussian record: {e}")))?;
        gaussians.push(g);
    }

    let assignments = if quantized {
        let mut a = Vec::with_capacity(count);
        for _ in 0..count {
            a.push(r.u32_le("assignment")?);
        }
        Some(a)
    } else {
        None
    };
    r.finish()?;

    let scene = Scene4D::new(gaussians, sh_degree, (t_min, t_max), frame_count)
        .map_err(|e| ToolsError::format(0, format!("invalid scene header: {e}")))?;
    Ok(match assignments {
        Some(assignments) => LoadedScene::Quantized { scene, assignments },
        None => LoadedScene::Plain(scene),
    })
}

pub fn write_scene(path: &Path, scene: &Scene4D) -> Result<()> {
    write_atomic(path, &encode_scene(scene))
}

pub fn write_quantized_scene(path: &Path, scene: &Scene4D, assignments: &[u32]) -> Result<()> {
    write_atomic(path, &encode_quantized_scene(scene, assignments)?)
}

pub fn read_scene(path: &Path) -> Result<LoadedScene> {
    decode_scene(&read_file(path)?)
}

/// Read a scene that must be plain (not SH-by-reference).
pub fn read_plain_scene(path: &Path) -> Result<Scene4D> {
    match read_scene(path)? {
        LoadedScene::Plain(s) => Ok(s),
        LoadedScene::Quantized { .. } => Err(ToolsError::Config(format!(
            "{} stores SH by reference; resolve it with its codebook first",
            path.display()
        ))),
    }
}
