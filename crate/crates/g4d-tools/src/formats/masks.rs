//! Packed key-frame visibility masks.
//!
//! Layout: magic "G4DM", u32 version = 1, u32 n_gaussians, u32 n_keyframes,
//! f32 threshold, then n_keyframes x f32 timestamps, then n_keyframes rows
//! of ceil(N/8) bytes; bit k of row i (LSB-first within each byte) is the
//! visibility of Gaussian k at keyframe i.
//!
//! Timestamps and the threshold are stored as f32; a mask set whose times
//! already sit on f32 values round-trips bit-for-bit.

use std::path::Path;

use g4d_core::{Bitmask, KeyframeMaskSet};

use super::{push_f32, push_u32, read_file, write_atomic, ByteReader};
use crate::error::ToolsError;
use crate::Result;

pub const MAGIC: &[u8; 4] = b"G4DM";
pub const VERSION: u32 = 1;

/// Header bytes preceding the bit rows: fixed fields plus the timestamps.
pub fn header_size(n_keyframes: usize) -> usize {
    4 + 4 + 4 + 4 + 4 + 4 * n_keyframes
}

/// Total file size: header + n_keyframes * ceil(N/8).
pub fn packed_size(n_gaussians: usize, n_keyframes: usize) -> usize {
    header_size(n_keyframes) + n_keyframes * n_gaussians.div_ceil(8)
}

pub fn pack_masks(set: &KeyframeMaskSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(packed_size(set.n_gaussians, set.keyframe_times.len()));
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    push_u32(&mut out, set.n_gaussians as u32);
    push_u32(&mut out, set.keyframe_times.len() as u32);
    push_f32(&mut out, set.visibility_threshold as f32);
    for &t in &set.keyframe_times {
        push_f32(&mut out, t as f32);
    }
    for mask in &set.masks {
        out.extend_from_slice(mask.bytes());
    }
    out
}

pub fn unpack_masks(bytes: &[u8]) -> Result<KeyframeMaskSet> {
    let mut r = ByteReader::new(bytes);
    r.magic(MAGIC)?;
    let version_at = r.pos();
    let version = r.u32_le("version")?;
    if version != VERSION {
        return Err(ToolsError::format(version_at, format!("unsupported version {version}")));
    }
    let n_gaussians = r.u32_le("gaussian count")? as usize;
    let kf_at = r.pos();
    let n_keyframes = r.u32_le("keyframe count")? as usize;
    if n_keyframes == 0 {
        return Err(ToolsError::format(kf_at, "mask set needs at least one keyframe"));
    }
    let threshold = r.f32_le("threshold")? as f64;
    let mut keyframe_times = Vec::with_capacity(n_keyframes);
    let times_at = r.pos();
    for _ in 0..n_keyframes {
        keyframe_times.push(r.f32_le("timestamp")? as f64);
    }
    if keyframe_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ToolsError::format(times_at, "keyframe times must be strictly increasing"));
    }
    let row = n_gaussians.div_ceil(8);
    let mut masks = Vec::with_capacity(n_keyframes);
    for _ in 0..n_keyframes {
        let at = r.pos();
        let raw = r.bytes(row, "mask row")?.to_vec();
        let mask = Bitmask::from_bytes(n_gaussians, raw)
            .ok_or_else(|| ToolsError::format(at, "mask row length mismatch"))?;
        masks.push(mask);
    }
    r.finish()?;
    Ok(KeyframeMaskSet { keyframe_times, masks, n_gaussians, visibility_threshold: threshold })
}

pub fn write_masks(path: &Path, set: &KeyframeMaskSet) -> Result<()> {
    write_atomic(path, &pack_masks(set))
}

pub fn read_masks(path: &Path) -> Result<KeyframeMaskSet> {
    unpack_masks(&read_file(path)?)
}
